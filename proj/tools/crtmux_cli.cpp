// crtmux: split encrypted superblocks into CRT residues across channels.
//
// Exit codes: 0 success, 2 usage or parameters, 3 transport, 4 integrity.

#include "crtmux/analysis.hpp"
#include "crtmux/error.hpp"
#include "crtmux/pipeline.hpp"
#include "crtmux/scheme.hpp"
#include "crtmux/transport.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <iomanip>
#include <numeric>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using namespace crtmux;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitTransport = 3;
constexpr int kExitIntegrity = 4;

struct UsageError : std::runtime_error {
   using std::runtime_error::runtime_error;
};

int exit_code_for(const Error& e) {
   switch (classify(e.code())) {
      case ErrorClass::Transport: return kExitTransport;
      case ErrorClass::Integrity: return kExitIntegrity;
      case ErrorClass::Usage: return kExitUsage;
   }
   return kExitUsage;
}

Bytes read_file(const fs::path& path) {
   std::ifstream in(path, std::ios::binary);
   if (!in)
      throw UsageError("cannot read " + path.string());
   return Bytes(std::istreambuf_iterator<char>(in), {});
}

void write_file(const fs::path& path, const Bytes& data) {
   std::ofstream out(path, std::ios::binary | std::ios::trunc);
   if (!out)
      throw UsageError("cannot write " + path.string());
   out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
}

SetupConfig load_key(const fs::path& path) { return deserialize_config(read_file(path)); }

template <std::size_t N>
std::array<std::uint8_t, N> parse_hex(const std::string& hex, const char* what) {
   if (hex.size() != 2 * N)
      throw UsageError(std::string(what) + " must be " + std::to_string(2 * N) + " hex digits");
   std::array<std::uint8_t, N> out{};
   for (std::size_t i = 0; i < N; ++i) {
      std::size_t used = 0;
      const auto byte = hex.substr(2 * i, 2);
      unsigned long v = 0;
      try {
         v = std::stoul(byte, &used, 16);
      } catch (const std::exception&) {
         used = 0;
      }
      if (used != 2)
         throw UsageError(std::string(what) + " is not valid hex");
      out[i] = static_cast<std::uint8_t>(v);
   }
   return out;
}

// "1..8", "1,2,4" or "5".
std::vector<std::size_t> parse_range(const std::string& text) {
   std::vector<std::size_t> out;
   try {
      if (const auto dots = text.find(".."); dots != std::string::npos) {
         const auto lo = std::stoul(text.substr(0, dots));
         const auto hi = std::stoul(text.substr(dots + 2));
         if (lo > hi)
            throw UsageError("empty range " + text);
         for (auto v = lo; v <= hi; ++v)
            out.push_back(v);
      } else {
         std::stringstream ss(text);
         std::string item;
         while (std::getline(ss, item, ','))
            out.push_back(std::stoul(item));
      }
   } catch (const std::invalid_argument&) {
      throw UsageError("bad range " + text);
   } catch (const std::out_of_range&) {
      throw UsageError("bad range " + text);
   }
   if (out.empty())
      throw UsageError("empty range " + text);
   return out;
}

std::vector<Natural> parse_moduli(const std::string& text) {
   std::vector<Natural> out;
   std::stringstream ss(text);
   std::string item;
   while (std::getline(ss, item, ',')) {
      if (item.empty() || !std::all_of(item.begin(), item.end(), ::isdigit))
         throw UsageError("bad modulus '" + item + "'");
      out.emplace_back(item);
   }
   return out;
}

AssignmentMode parse_mode(const std::string& s) {
   if (s == "dynamic")
      return AssignmentMode::Dynamic;
   if (s == "static")
      return AssignmentMode::Static;
   throw UsageError("mode must be dynamic or static");
}

std::string mode_name(AssignmentMode m) { return m == AssignmentMode::Static ? "static" : "dynamic"; }

// ---------------------------------------------------------------------------

struct KeygenOpts {
   std::uint32_t channels = 0;
   std::uint32_t used = 0;
   std::uint32_t multiplier = 1;
   std::uint64_t seed = 0;
   std::string mode = "dynamic";
   std::string cipher = "aes128";
   std::string key_hex;
   std::string iv_hex;
   std::uint32_t session_length = kDefaultSuperblocksPerSession;
   std::string out;
};

int run_keygen(const KeygenOpts& o) {
   if (o.cipher != "aes128")
      throw UsageError("only aes128 is supported");
   if (o.channels > 0xffff || o.used > 0xffff || o.multiplier > 0xffff)
      throw UsageError("channel counts and multiplier must fit in 16 bits");

   CipherSuite cs;
   cs.id = CipherId::Aes128;
   if (o.key_hex.empty() || o.iv_hex.empty()) {
      // Deterministic in the seed so that identical flags give identical keys.
      Prng km = derive_prng(o.seed, SeedDomain::KeyMaterial);
      const Bytes material = gen_decoy(km, 32);
      std::copy_n(material.begin(), 16, cs.key.begin());
      std::copy_n(material.begin() + 16, 16, cs.iv.begin());
      std::cerr << "warning: key/iv derived from the seed; pass --key-hex/--iv-hex for real use\n";
   }
   if (!o.key_hex.empty())
      cs.key = parse_hex<16>(o.key_hex, "--key-hex");
   if (!o.iv_hex.empty())
      cs.iv = parse_hex<16>(o.iv_hex, "--iv-hex");

   const auto cfg = setup(cs, static_cast<std::uint16_t>(o.channels),
                          static_cast<std::uint16_t>(o.used), static_cast<std::uint16_t>(o.multiplier),
                          o.seed, parse_mode(o.mode), o.session_length);
   write_file(o.out, serialize_config(cfg));

   const auto bw = bandwidth_loss(kBlockBits, cfg.multiplier, cfg.used);
   std::vector<std::size_t> first(cfg.used);
   std::iota(first.begin(), first.end(), std::size_t{0});
   const auto pd = distinguishability(cfg.superblock_bits(), cfg.moduli.subset(first));

   std::cout << std::setprecision(6) << "key\t" << o.out << '\n'
             << "channels\t" << cfg.available << '\n'
             << "used\t" << cfg.used << '\n'
             << "multiplier\t" << cfg.multiplier << '\n'
             << "superblock_bits\t" << cfg.superblock_bits() << '\n'
             << "mode\t" << mode_name(cfg.mode) << '\n'
             << "moduli\t" << cfg.moduli.size() << '\n'
             << "modulus_bits\t" << moduli_bit_length(cfg.superblock_bits(), cfg.used) << '\n'
             << "cell_bytes\t" << cfg.moduli.max_byte_width() << '\n'
             << "payload_bits_per_channel\t" << bw.bits_per_channel << '\n'
             << "bytes_per_channel\t" << bw.bytes_per_channel << '\n'
             << "bandwidth_loss_percent\t" << 100.0 * bw.loss_fraction << '\n'
             << "p_d\t" << pd.p_d_theoretical << '\n';
   return kExitOk;
}

// ---------------------------------------------------------------------------

struct NetOpts {
   std::string key;
   std::string recv_key;
   std::string in = "-";
   std::string out = "-";
   std::string backend = "tcp";
   std::string host = "127.0.0.1";
   std::uint16_t port_base = 9000;
   std::string capture;
   std::uint32_t timeout_ms = 30000;
};

std::istream& open_input(const std::string& path, std::ifstream& file) {
   if (path == "-")
      return std::cin;
   file.open(path, std::ios::binary);
   if (!file)
      throw UsageError("cannot read " + path);
   return file;
}

std::ostream& open_output(const std::string& path, std::ofstream& file) {
   if (path == "-")
      return std::cout;
   file.open(path, std::ios::binary | std::ios::trunc);
   if (!file)
      throw UsageError("cannot write " + path);
   return file;
}

int run_send_memory(const NetOpts& o, const SetupConfig& cfg) {
   if (o.out.empty())
      throw UsageError("--backend memory needs --out");
   const SetupConfig rcfg = o.recv_key.empty() ? cfg : load_key(o.recv_key);

   std::ifstream infile;
   std::istream& in = open_input(o.in, infile);
   std::ofstream outfile;
   std::ostream& out = open_output(o.out, outfile);
   std::unique_ptr<CaptureWriter> capture;
   if (!o.capture.empty())
      capture = std::make_unique<CaptureWriter>(o.capture, cfg.available);

   auto [tx, rx] = open_memory_bundle(cell_widths(cfg));
   std::exception_ptr send_error;
   std::thread sender_thread([&, bundle = std::move(tx)]() mutable {
      try {
         Sender sender(cfg);
         send_stream(sender, in, bundle, capture.get());
      } catch (...) {
         send_error = std::current_exception();
         bundle.close_all();
      }
   });
   std::exception_ptr recv_error;
   try {
      Receiver receiver(rcfg);
      receive_stream(receiver, rx, out);
   } catch (...) {
      recv_error = std::current_exception();
   }
   rx = TransportBundle();
   sender_thread.join();
   if (recv_error)
      std::rethrow_exception(recv_error);
   if (send_error)
      std::rethrow_exception(send_error);
   return kExitOk;
}

int run_send(const NetOpts& o) {
   const auto cfg = load_key(o.key);
   if (o.backend == "memory")
      return run_send_memory(o, cfg);
   if (o.backend != "tcp")
      throw UsageError("backend must be tcp or memory");

   std::ifstream infile;
   std::istream& in = open_input(o.in, infile);
   std::unique_ptr<CaptureWriter> capture;
   if (!o.capture.empty())
      capture = std::make_unique<CaptureWriter>(o.capture, cfg.available);

   auto bundle = connect_tcp(o.host, o.port_base, cell_widths(cfg), Millis(o.timeout_ms));
   Sender sender(cfg);
   const auto stats = send_stream(sender, in, bundle, capture.get());
   std::cerr << "sent " << stats.bytes << " bytes in " << stats.superblocks << " superblocks\n";
   return kExitOk;
}

int run_recv(const NetOpts& o) {
   const auto cfg = load_key(o.key);
   if (o.backend != "tcp")
      throw UsageError("recv only listens on tcp; use send --backend memory for in-process runs");
   TcpListener listener(o.host, o.port_base, cfg.available);
   auto bundle = listener.accept(cell_widths(cfg), Millis(o.timeout_ms));

   std::ofstream outfile;
   std::ostream& out = open_output(o.out, outfile);
   Receiver receiver(cfg);
   const auto stats = receive_stream(receiver, bundle, out);
   std::cerr << "received " << stats.bytes << " bytes in " << stats.superblocks << " superblocks\n";
   return kExitOk;
}

// ---------------------------------------------------------------------------

struct AnalyzeOpts {
   std::size_t nb = kBlockBits;
   std::size_t channels = 10;
   std::string multipliers = "1..8";
   std::string n = "512";
   std::string moduli;
   std::string key;
   std::uint32_t p = 0;
   std::uint32_t q = 0;
   std::string capture;
   bool uninformed = false;
   std::size_t cells = 0;
};

int analyze_bandwidth(const AnalyzeOpts& o) {
   std::vector<BandwidthReport> rows;
   for (auto l : parse_range(o.multipliers))
      rows.push_back(bandwidth_loss(o.nb, l, o.channels));
   std::cout << format_bandwidth_table(rows);
   return kExitOk;
}

int analyze_smax(const AnalyzeOpts& o) {
   const auto ns = parse_range(o.n);
   if (ns.size() == 1) {
      std::cout << s_max_estimate(ns[0]) << '\n';
      return kExitOk;
   }
   std::cout << format_smax_table(ns);
   return kExitOk;
}

int analyze_pd(const AnalyzeOpts& o) {
   DistinguisherReport r;
   if (!o.key.empty()) {
      const auto cfg = load_key(o.key);
      std::vector<std::size_t> first(cfg.used);
      std::iota(first.begin(), first.end(), std::size_t{0});
      r = distinguishability(cfg.superblock_bits(), cfg.moduli.subset(first));
   } else {
      if (o.moduli.empty())
         throw UsageError("pd needs --moduli or --key");
      const auto ns = parse_range(o.n);
      r = distinguishability(ns.at(0), ModuliSet(parse_moduli(o.moduli)));
   }
   std::cout << std::setprecision(6) << r.p_d_theoretical << '\n' << format_distinguisher(r);
   return kExitOk;
}

int analyze_independence(const AnalyzeOpts& o) {
   std::cout << format_independence(independence_check(o.p, o.q));
   return kExitOk;
}

int analyze_classify(const AnalyzeOpts& o) {
   if (o.capture.empty() || o.key.empty())
      throw UsageError("classify needs --capture and --key");
   const auto cfg = load_key(o.key);
   const auto widths = cell_widths(cfg);
   // The real channel set changes at every session boundary, so by default
   // only the first session's worth of cells is looked at.
   const std::size_t cells = o.cells ? o.cells : cfg.superblocks_per_session;
   std::vector<Bytes> streams;
   for (std::size_t c = 0; c < cfg.available; ++c) {
      auto s = read_file(fs::path(o.capture) / ("ch_" + std::to_string(c) + ".bin"));
      s.resize(std::min(s.size(), cells * widths[c]));
      streams.push_back(std::move(s));
   }
   const auto hypothesis =
      o.uninformed ? uninformed_hypothesis(widths) : moduli_hypothesis(cfg.moduli, cfg.available);
   std::cout << format_verdicts(channel_classifier(streams, widths, hypothesis));
   return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
   CLI::App app{"Multi-channel CRT secure transmission"};
   app.require_subcommand(1);

   KeygenOpts kg;
   auto* keygen = app.add_subcommand("keygen", "Run the setup phase and write a key file");
   keygen->add_option("--channels", kg.channels, "Available channels A")->required();
   keygen->add_option("--used", kg.used, "Channels S carrying residues")->required();
   keygen->add_option("--multiplier", kg.multiplier, "Cipher blocks L per superblock");
   keygen->add_option("--seed", kg.seed, "Master seed")->required();
   keygen->add_option("--mode", kg.mode, "Moduli assignment: dynamic or static");
   keygen->add_option("--cipher", kg.cipher, "Block cipher (aes128)");
   keygen->add_option("--key-hex", kg.key_hex, "AES key, 32 hex digits");
   keygen->add_option("--iv-hex", kg.iv_hex, "CBC IV, 32 hex digits");
   keygen->add_option("--session-length", kg.session_length, "Superblocks per session");
   keygen->add_option("--out", kg.out, "Key file to write")->required();

   NetOpts snd;
   auto* send = app.add_subcommand("send", "Send a file over the channels");
   send->add_option("--key", snd.key, "Key file")->required();
   send->add_option("--in", snd.in, "Input file, - for stdin");
   send->add_option("--backend", snd.backend, "tcp or memory");
   send->add_option("--host", snd.host, "Receiver address");
   send->add_option("--port-base", snd.port_base, "Port of channel 0");
   send->add_option("--capture", snd.capture, "Directory for raw per-channel cell streams");
   send->add_option("--out", snd.out, "Output file for --backend memory");
   send->add_option("--recv-key", snd.recv_key, "Receiver key for --backend memory");
   send->add_option("--timeout-ms", snd.timeout_ms, "Connect timeout");

   NetOpts rcv;
   auto* recv = app.add_subcommand("recv", "Listen for a transfer and write the plaintext");
   recv->add_option("--key", rcv.key, "Key file")->required();
   recv->add_option("--out", rcv.out, "Output file, - for stdout");
   recv->add_option("--backend", rcv.backend, "tcp");
   recv->add_option("--host", rcv.host, "Bind address");
   recv->add_option("--port-base", rcv.port_base, "Port of channel 0");
   recv->add_option("--timeout-ms", rcv.timeout_ms, "Accept timeout");

   AnalyzeOpts an;
   auto* analyze = app.add_subcommand("analyze", "Bandwidth and security analyses");
   analyze->require_subcommand(1);
   auto* bandwidth = analyze->add_subcommand("bandwidth", "Bandwidth loss per multiplier");
   bandwidth->add_option("--nb", an.nb, "Cipher block bits");
   bandwidth->add_option("--channels", an.channels, "Channels S");
   bandwidth->add_option("--multipliers", an.multipliers, "Multipliers, e.g. 1..8");
   auto* smax = analyze->add_subcommand("smax", "Largest usable channel count");
   smax->add_option("--n", an.n, "Superblock bits, a value, list or range")->required();
   auto* pd = analyze->add_subcommand("pd", "Distinguishability report");
   pd->add_option("--n", an.n, "Superblock bits");
   pd->add_option("--moduli", an.moduli, "Comma-separated moduli");
   pd->add_option("--key", an.key, "Take N and moduli from a key file");
   auto* indep = analyze->add_subcommand("independence", "Joint residue table for two moduli");
   indep->add_option("--p", an.p)->required();
   indep->add_option("--q", an.q)->required();
   auto* classify_cmd = analyze->add_subcommand("classify", "Classify captured channels");
   classify_cmd->add_option("--capture", an.capture, "Capture directory")->required();
   classify_cmd->add_option("--key", an.key, "Key file supplying widths and moduli")->required();
   classify_cmd->add_option("--cells", an.cells, "Cells per channel to examine (default: one session)");
   classify_cmd->add_flag("--uninformed", an.uninformed, "Assume no knowledge of the moduli");

   try {
      app.parse(argc, argv);
   } catch (const CLI::ParseError& e) {
      const int rc = app.exit(e);
      return rc == 0 ? kExitOk : kExitUsage;
   }

   try {
      if (*keygen)
         return run_keygen(kg);
      if (*send)
         return run_send(snd);
      if (*recv)
         return run_recv(rcv);
      if (*bandwidth)
         return analyze_bandwidth(an);
      if (*smax)
         return analyze_smax(an);
      if (*pd)
         return analyze_pd(an);
      if (*indep)
         return analyze_independence(an);
      if (*classify_cmd)
         return analyze_classify(an);
   } catch (const Error& e) {
      std::cerr << "error: " << e.what() << '\n';
      return exit_code_for(e);
   } catch (const UsageError& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kExitUsage;
   } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kExitUsage;
   }
   return kExitUsage;
}
