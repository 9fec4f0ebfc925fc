// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any
// failure. Oracles here use machine integers and share nothing with the
// library paths under test beyond the public API being checked.

#include "crtmux/analysis.hpp"
#include "crtmux/cipher.hpp"
#include "crtmux/crt.hpp"
#include "crtmux/error.hpp"
#include "crtmux/pipeline.hpp"
#include "crtmux/scheme.hpp"
#include "crtmux/transport.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <thread>

using namespace crtmux;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
   bool pass = true;
   std::string detail;
};

// Records the first failure and keeps the message short.
struct Check {
   Outcome out;
   void fail(const std::string& why) {
      if (out.pass)
         out.detail = why;
      out.pass = false;
   }
   bool expect(bool cond, const std::string& why) {
      if (!cond)
         fail(why);
      return cond;
   }
};

std::vector<std::uint64_t> to_u64(const ModuliSet& m) {
   std::vector<std::uint64_t> v;
   for (const auto& q : m.moduli())
      v.push_back(static_cast<std::uint64_t>(q));
   return v;
}

// ---------------------------------------------------------------------------
// 1. bandwidth figures

Outcome bandwidth() {
   Check c;
   const auto l1 = bandwidth_loss(128, 1, 10);
   const auto l4 = bandwidth_loss(128, 4, 10);
   c.expect(100.0 * l1.loss_fraction == 18.75, "L=1 loss is not exactly 18.75%");
   c.expect(std::abs(100.0 * l4.loss_fraction - 7.14) <= 0.005, "L=4 loss not within 0.005 of 7.14%");
   // The same figures as rendered by the report path.
   std::istringstream table(format_bandwidth_table({l1, l4}));
   std::string header;
   std::getline(table, header);
   std::map<int, double> printed;
   int l;
   std::size_t n, s, bits, bytes;
   double pct;
   while (table >> l >> n >> s >> bits >> bytes >> pct)
      printed[l] = pct;
   c.expect(printed.count(1) && printed[1] == 18.75, "table row L=1 is not 18.75");
   c.expect(printed.count(4) && std::abs(printed[4] - 7.14) <= 0.005, "table row L=4 is not 7.14");
   char buf[96];
   std::snprintf(buf, sizeof buf, "L=1 %.4f%%, L=4 %.4f%%", 100.0 * l1.loss_fraction,
                 100.0 * l4.loss_fraction);
   if (c.out.pass)
      c.out.detail = buf;
   return c.out;
}

// ---------------------------------------------------------------------------
// 2. CRT oracle equivalence

// Every x below the product, both directions, against a table built by
// scanning x and tallying machine residues.
void crt_exhaustive(const ModuliSet& m, Check& c, std::uint64_t& values) {
   const auto q = to_u64(m);
   const std::uint64_t product = static_cast<std::uint64_t>(m.product());
   std::vector<std::int64_t> by_tuple(product, -1);
   auto tuple_index = [&](std::uint64_t x) {
      std::uint64_t idx = 0;
      for (auto qi : q)
         idx = idx * qi + x % qi;
      return idx;
   };
   for (std::uint64_t x = 0; x < product; ++x) {
      auto& slot = by_tuple[tuple_index(x)];
      if (!c.expect(slot == -1, "two values share a residue tuple"))
         return;
      slot = static_cast<std::int64_t>(x);
   }

   ResidueVector tuple(q.size());
   for (std::uint64_t t = 0; t < product; ++t) {
      std::uint64_t rest = t;
      for (std::size_t i = q.size(); i-- > 0;) {
         tuple[i] = rest % q[i];
         rest /= q[i];
      }
      if (!c.expect(crt_combine(tuple, m) == by_tuple[t], "crt_combine disagrees with search"))
         return;
   }
   for (std::uint64_t x = 0; x < product; ++x) {
      const auto r = crt_split(Natural(x), m);
      for (std::size_t i = 0; i < q.size(); ++i)
         if (!c.expect(r[i] == x % q[i], "crt_split residue wrong"))
            return;
      if (!c.expect(crt_combine(r, m) == x, "round trip failed"))
         return;
   }
   values += product;
}

Outcome crt_equivalence() {
   Check c;
   constexpr std::uint64_t kLimit = std::uint64_t{1} << 20;
   std::uint64_t values = 0;
   std::size_t sets = 0;

   // Every set the generator can emit below the limit, for a spread of seeds.
   for (std::size_t n = 8; n < 20; ++n)
      for (std::size_t s = 1; s <= n; ++s)
         for (std::uint64_t seed = 0; seed < 2; ++seed) {
            ModuliSet m;
            try {
               m = gen_moduli(n, s, seed);
            } catch (const Error& e) {
               if (e.code() == Errc::NotEnoughPrimes)
                  continue;
               throw;
            }
            if (m.product() >= kLimit)
               continue;
            crt_exhaustive(m, c, values);
            ++sets;
         }

   // Every pairwise coprime set of up to three moduli with product < 2^10.
   constexpr std::uint64_t kSmall = 1024;
   for (std::uint64_t a = 2; a < kSmall; ++a) {
      crt_exhaustive(ModuliSet({Natural(a)}), c, values);
      ++sets;
      for (std::uint64_t b = a + 1; a * b < kSmall; ++b) {
         if (std::gcd(a, b) != 1)
            continue;
         crt_exhaustive(ModuliSet({Natural(a), Natural(b)}), c, values);
         ++sets;
         for (std::uint64_t d = b + 1; a * b * d < kSmall; ++d) {
            if (std::gcd(a, d) != 1 || std::gcd(b, d) != 1)
               continue;
            crt_exhaustive(ModuliSet({Natural(a), Natural(b), Natural(d)}), c, values);
            ++sets;
         }
      }
   }

   // Random coprime sets of mixed sizes reaching up to the limit.
   std::mt19937_64 rng(20);
   for (int trial = 0; trial < 24; ++trial) {
      std::vector<Natural> moduli;
      std::uint64_t product = 1;
      const std::size_t want = 1 + trial % 5;
      for (int attempt = 0; attempt < 200 && moduli.size() < want; ++attempt) {
         const std::uint64_t cap = (kLimit - 1) / product;
         if (cap < 2)
            break;
         std::uint64_t bound = std::min<std::uint64_t>(cap, std::uint64_t{1} << (20 / want + 1));
         bound = std::max<std::uint64_t>(bound, 2);
         const std::uint64_t v = 2 + rng() % (bound - 1);
         bool coprime = true;
         for (const auto& q : moduli)
            coprime = coprime && std::gcd(v, static_cast<std::uint64_t>(q)) == 1;
         if (!coprime || product * v >= kLimit)
            continue;
         moduli.emplace_back(v);
         product *= v;
      }
      crt_exhaustive(ModuliSet(moduli), c, values);
      ++sets;
   }

   if (c.out.pass)
      c.out.detail = std::to_string(sets) + " sets, " + std::to_string(values) + " values";
   return c.out;
}

// ---------------------------------------------------------------------------
// 3. independence

Outcome independence() {
   Check c;
   constexpr std::uint32_t kLimit = 1u << 16;
   std::uint64_t pairs = 0;
   for (std::uint32_t p = 2; p * (p + 1) <= kLimit; ++p)
      for (std::uint32_t q = p + 1; std::uint64_t{p} * q <= kLimit; ++q) {
         if (std::gcd(p, q) != 1)
            continue;
         const auto t = independence_check(p, q);
         ++pairs;
         // Each x lands in exactly one cell, so flatness means no cell is
         // anything but 1; the table is pq cells for pq values.
         bool flat = t.counts.size() == std::size_t{p} * q;
         for (auto v : t.counts)
            flat = flat && v == 1;
         if (!c.expect(flat && t.flat(), "table not flat for " + std::to_string(p) + "," +
                                             std::to_string(q)))
            return c.out;
      }
   // The swapped order is the transpose; spot-check that the library agrees.
   for (auto [p, q] : {std::pair{255u, 256u}, {7u, 9362u}, {256u, 255u}, {9362u, 7u}, {1u, 65536u}})
      c.expect(independence_check(p, q).flat(), "swapped/edge pair not flat");
   if (c.out.pass)
      c.out.detail = std::to_string(pairs) + " unordered coprime pairs";
   return c.out;
}

// ---------------------------------------------------------------------------
// 4. distinguishability formula

// Counts tuples (y_1..y_S), 0 <= y_i < 2^{ceil log2 q_i}, that are not the
// residues of any x < 2^N.
std::uint64_t count_invalid(const ModuliSet& m, std::size_t n_bits) {
   const auto q = to_u64(m);
   std::vector<unsigned> field;
   unsigned total = 0;
   for (auto qi : q) {
      unsigned l = 0;
      while ((std::uint64_t{1} << l) < qi)
         ++l;
      field.push_back(l);
      total += l;
   }
   std::uint64_t product = 1;
   for (auto qi : q)
      product *= qi;
   std::vector<bool> hit(product, false);
   for (std::uint64_t x = 0; x < (std::uint64_t{1} << n_bits); ++x) {
      std::uint64_t idx = 0;
      for (auto qi : q)
         idx = idx * qi + x % qi;
      hit[idx] = true;
   }
   std::uint64_t invalid = 0;
   for (std::uint64_t t = 0; t < (std::uint64_t{1} << total); ++t) {
      std::uint64_t rest = t, idx = 0;
      bool in_range = true;
      std::vector<std::uint64_t> y(q.size());
      for (std::size_t i = q.size(); i-- > 0;) {
         y[i] = rest & ((std::uint64_t{1} << field[i]) - 1);
         rest >>= field[i];
      }
      for (std::size_t i = 0; i < q.size(); ++i) {
         in_range = in_range && y[i] < q[i];
         idx = idx * q[i] + (in_range ? y[i] : 0);
      }
      if (!in_range || !hit[idx])
         ++invalid;
   }
   return invalid;
}

Outcome distinguishability_formula() {
   Check c;
   std::size_t exact = 0, bounded = 0;
   for (std::size_t n = 8; n <= 24; ++n)
      for (std::size_t s = 1; s <= n; ++s)
         for (std::uint64_t seed = 0; seed < 2; ++seed) {
            ModuliSet m;
            try {
               m = gen_moduli(n, s, seed);
            } catch (const Error& e) {
               if (e.code() == Errc::NotEnoughPrimes)
                  continue;
               throw;
            }
            const auto r = distinguishability(n, m);
            if (r.total_bits <= 24) {
               const double counted =
                  static_cast<double>(count_invalid(m, n)) / std::ldexp(1.0, static_cast<int>(r.total_bits));
               if (!c.expect(r.p_d_theoretical == counted,
                             "p_d mismatch at N=" + std::to_string(n) + " S=" + std::to_string(s)))
                  return c.out;
               ++exact;
            }
            if (s >= 2) {
               c.expect(r.p_d_theoretical >= 0.5, "p_d < 0.5 at N=" + std::to_string(n));
               ++bounded;
            }
         }
   // Lower bound over realistic superblock sizes as well.
   for (std::size_t l = 1; l <= kMaxMultiplier; ++l)
      for (std::size_t s : {2, 3, 5, 10, 16, 32})
         for (std::uint64_t seed = 0; seed < 2; ++seed) {
            if (primes_with_bit_length(moduli_bit_length(l * kBlockBits, s)) < s)
               continue;
            const auto m = gen_moduli(l * kBlockBits, s, seed);
            c.expect(distinguishability(l * kBlockBits, m).p_d_theoretical >= 0.5,
                     "p_d < 0.5 at L=" + std::to_string(l));
            ++bounded;
         }
   c.expect(exact > 0, "no set was small enough to count");
   if (c.out.pass)
      c.out.detail = std::to_string(exact) + " sets counted exactly, " + std::to_string(bounded) +
                     " sets with S>=2 bounded";
   return c.out;
}

// ---------------------------------------------------------------------------
// 5. end-to-end round trip

CipherSuite random_suite(std::mt19937_64& rng) {
   CipherSuite cs;
   for (auto& b : cs.key)
      b = static_cast<std::uint8_t>(rng());
   for (auto& b : cs.iv)
      b = static_cast<std::uint8_t>(rng());
   return cs;
}

Bytes transfer_tcp(const SetupConfig& cfg, const Bytes& message, std::mt19937_64& rng) {
   const auto widths = cell_widths(cfg);
   std::unique_ptr<TcpListener> listener;
   for (int attempt = 0; !listener; ++attempt) {
      const auto base = static_cast<std::uint16_t>(20000 + rng() % 40000);
      try {
         listener = std::make_unique<TcpListener>("127.0.0.1", base, cfg.available);
      } catch (const Error& e) {
         if (e.code() != Errc::BindFailed || attempt > 50)
            throw;
      }
   }
   std::ostringstream received;
   std::exception_ptr recv_error;
   std::thread rx([&] {
      try {
         auto bundle = listener->accept(widths, Millis(10000));
         Receiver receiver(cfg);
         receive_stream(receiver, bundle, received, Millis(10000));
      } catch (...) {
         recv_error = std::current_exception();
      }
   });
   std::exception_ptr send_error;
   try {
      auto bundle = connect_tcp("127.0.0.1", listener->port_base(), widths, Millis(10000));
      Sender sender(cfg);
      std::istringstream in(std::string(message.begin(), message.end()));
      send_stream(sender, in, bundle);
   } catch (...) {
      send_error = std::current_exception();
   }
   rx.join();
   if (send_error)
      std::rethrow_exception(send_error);
   if (recv_error)
      std::rethrow_exception(recv_error);
   const auto s = received.str();
   return Bytes(s.begin(), s.end());
}

Outcome round_trip() {
   Check c;
   std::mt19937_64 rng(5);
   std::size_t done = 0, integrity_errors = 0, bytes = 0;
   for (int i = 0; i < 200; ++i) {
      const std::uint16_t a = (i & 1) ? 16 : 10;
      const std::uint16_t l = (i & 2) ? 4 : 1;
      const auto mode = (i & 4) ? AssignmentMode::Static : AssignmentMode::Dynamic;
      const bool tcp = i & 8;
      // A short session length on some runs makes sessions roll mid-message.
      const std::uint32_t spb = (i % 3 == 0) ? 16 : kDefaultSuperblocksPerSession;
      const auto cfg = setup(random_suite(rng), a, 10, l, rng(), mode, spb);

      Bytes message(rng() % 10001);
      if (i < 2)
         message.resize(i == 0 ? 0 : 10000);
      for (auto& b : message)
         b = static_cast<std::uint8_t>(rng());
      try {
         const Bytes got = tcp ? transfer_tcp(cfg, message, rng) : transfer_in_memory(cfg, cfg, message);
         if (!c.expect(got == message, "output differs on message " + std::to_string(i)))
            break;
      } catch (const Error& e) {
         if (classify(e.code()) == ErrorClass::Integrity)
            ++integrity_errors;
         c.fail("message " + std::to_string(i) + ": " + e.what());
         break;
      }
      ++done;
      bytes += message.size();
   }
   c.expect(integrity_errors == 0, "integrity errors");
   if (c.out.pass)
      c.out.detail = std::to_string(done) + " messages, " + std::to_string(bytes) + " bytes";
   return c.out;
}

// ---------------------------------------------------------------------------
// 6. cipher conformance

Outcome cipher_conformance() {
   Check c;
   CipherSuite cs;
   for (int i = 0; i < 16; ++i)
      cs.key[i] = static_cast<std::uint8_t>(i);
   Block pt, want;
   const std::uint8_t ct[16] = {0x69, 0xc4, 0xe0, 0xd8, 0x6a, 0x7b, 0x04, 0x30,
                                0xd8, 0xcd, 0xb7, 0x80, 0x70, 0xb4, 0xc5, 0x5a};
   for (int i = 0; i < 16; ++i) {
      pt[i] = static_cast<std::uint8_t>(i * 0x11);
      want[i] = ct[i];
   }
   auto cipher = make_block_cipher(cs);
   c.expect(cipher->encrypt_block(pt) == want, "encryption differs from the published vector");
   c.expect(cipher->decrypt_block(want) == pt, "decryption differs from the published vector");
   if (c.out.pass)
      c.out.detail = "69c4e0d86a7b0430d8cdb78070b4c55a";
   return c.out;
}

// ---------------------------------------------------------------------------
// 7. distinguisher experiment

Outcome distinguisher() {
   Check c;
   std::mt19937_64 rng(7);
   std::size_t runs = 0, decoys = 0, reals = 0, worst_k = 0;
   for (std::uint16_t a : {12, 16, 32})
      for (std::uint16_t l : {1, 4, 15})
         for (auto mode : {AssignmentMode::Dynamic, AssignmentMode::Static})
            for (int rep = 0; rep < 2; ++rep) {
               const auto cfg = setup(random_suite(rng), a, 10, l, rng(), mode);
               const auto widths = cell_widths(cfg);
               Sender sender(cfg);
               std::vector<Bytes> streams(a);
               SuperBlock sb{Bytes(cfg.superblock_bytes())};
               // One full session: the selection is fixed throughout.
               for (std::uint32_t k = 0; k < cfg.superblocks_per_session; ++k) {
                  for (auto& b : sb.bytes)
                     b = static_cast<std::uint8_t>(rng());
                  for (const auto& p : sender.process(sb))
                     streams[p.channel].insert(streams[p.channel].end(), p.payload.begin(),
                                               p.payload.end());
               }
               const auto& sel = sender.session().assignment;
               const auto hypothesis = moduli_hypothesis(cfg.moduli, a);
               const auto verdicts = channel_classifier(streams, widths, hypothesis);
               for (const auto& v : verdicts) {
                  const bool real = sel.is_selected(v.channel);
                  if (real) {
                     ++reals;
                     c.expect(v.verdict == Verdict::Real, "real channel misflagged");
                     continue;
                  }
                  ++decoys;
                  // Smallest k with (q/2^(8w))^k < 1e-6.
                  const double ratio = static_cast<double>(hypothesis[v.channel]) /
                                       std::ldexp(1.0, static_cast<int>(8 * widths[v.channel]));
                  std::size_t k = 1;
                  while (std::pow(ratio, static_cast<double>(k)) >= 1e-6)
                     ++k;
                  worst_k = std::max(worst_k, k);
                  c.expect(k <= cfg.superblocks_per_session, "session too short for the bound");
                  c.expect(v.verdict == Verdict::Decoy && v.first_invalid_cell &&
                              *v.first_invalid_cell < k,
                           "decoy on channel " + std::to_string(v.channel) + " not found within " +
                              std::to_string(k) + " cells");
               }
               for (const auto& v : channel_classifier(streams, widths, uninformed_hypothesis(widths)))
                  c.expect(v.verdict == Verdict::Real, "uninformed hypothesis flagged a channel");
               ++runs;
            }
   if (c.out.pass)
      c.out.detail = std::to_string(runs) + " sessions, " + std::to_string(decoys) + " decoys found, " +
                     std::to_string(reals) + " real kept, largest k " + std::to_string(worst_k);
   return c.out;
}

// ---------------------------------------------------------------------------
// 8. reduction

Outcome reduction() {
   Check c;
   std::mt19937_64 rng(8);
   CipherSuite cs = random_suite(rng);
   auto cipher = make_block_cipher(cs);
   for (int i = 0; i < 100; ++i) {
      const std::size_t l = 1 + rng() % kMaxMultiplier;
      const std::size_t s = 1 + rng() % 10;
      SuperBlock pt{Bytes(l * kBlockBytes)};
      for (auto& b : pt.bytes)
         b = static_cast<std::uint8_t>(rng());
      Block chain = cs.iv;
      const SuperBlock ct = encrypt_superblock(pt, *cipher, chain);
      const Natural recovered = cipher_breaker_reduction(
         ct, s, rng(), [](const ModuliSet& m, const ResidueVector& r) { return crt_combine(r, m); });
      c.expect(natural_to_superblock(recovered, l * kBlockBits).bytes == ct.bytes,
               "reduction did not return the ciphertext");
   }
   if (c.out.pass)
      c.out.detail = "100 superblocks";
   return c.out;
}

struct Criterion {
   int id;
   const char* name;
   double limit_s;  // 0 when no runtime bound applies
   std::function<Outcome()> run;
};

}  // namespace

int main() {
   const std::vector<Criterion> criteria = {
      {1, "bandwidth figures", 1.0, bandwidth},
      {2, "crt oracle equivalence", 60.0, crt_equivalence},
      {3, "residue independence", 60.0, independence},
      {4, "distinguishability formula", 0.0, distinguishability_formula},
      {5, "end-to-end round trip", 120.0, round_trip},
      {6, "aes-128 conformance", 0.0, cipher_conformance},
      {7, "distinguisher experiment", 60.0, distinguisher},
      {8, "cipher breaker reduction", 0.0, reduction},
   };
   int failed = 0;
   for (const auto& cr : criteria) {
      const auto t0 = Clock::now();
      Outcome o;
      try {
         o = cr.run();
      } catch (const std::exception& e) {
         o = {false, std::string("exception: ") + e.what()};
      }
      const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
      if (o.pass && cr.limit_s > 0 && secs > cr.limit_s) {
         o.pass = false;
         o.detail += "; over the " + std::to_string(static_cast<int>(cr.limit_s)) + " s budget";
      }
      char line[512];
      std::snprintf(line, sizeof line, "%s %d %-28s %7.2fs  %s", o.pass ? "PASS" : "FAIL", cr.id,
                    cr.name, secs, o.detail.c_str());
      std::cout << line << std::endl;
      failed += !o.pass;
   }
   std::cout << (failed ? "FAILED " : "ALL PASSED ") << criteria.size() - failed << "/"
             << criteria.size() << std::endl;
   return failed ? 1 : 0;
}
