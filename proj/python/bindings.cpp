// Python bindings. Big integers cross the boundary as Python ints,
// converted through their decimal text.

#include "crtmux/analysis.hpp"
#include "crtmux/crt.hpp"
#include "crtmux/error.hpp"
#include "crtmux/pipeline.hpp"
#include "crtmux/scheme.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <numeric>

namespace py = pybind11;
using namespace crtmux;

namespace {

Natural to_natural(const py::int_& v) {
   const std::string s = py::str(v);
   if (!s.empty() && s[0] == '-')
      throw py::value_error("negative integers are not supported");
   return Natural(s);
}

py::int_ from_natural(const Natural& x) {
   const std::string s = x.str();
   return py::reinterpret_steal<py::int_>(PyLong_FromString(s.c_str(), nullptr, 10));
}

std::vector<Natural> to_naturals(const std::vector<py::int_>& vs) {
   std::vector<Natural> out;
   out.reserve(vs.size());
   for (const auto& v : vs)
      out.push_back(to_natural(v));
   return out;
}

py::list from_naturals(const std::vector<Natural>& xs) {
   py::list out;
   for (const auto& x : xs)
      out.append(from_natural(x));
   return out;
}

Bytes to_bytes(const py::bytes& b) {
   const std::string s = b;
   return Bytes(s.begin(), s.end());
}

py::bytes from_bytes(const Bytes& b) {
   return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
}

template <std::size_t N>
std::array<std::uint8_t, N> fixed(const py::bytes& b, const char* what) {
   const std::string s = b;
   if (s.size() != N)
      throw py::value_error(std::string(what) + " must be " + std::to_string(N) + " bytes");
   std::array<std::uint8_t, N> out{};
   std::copy(s.begin(), s.end(), out.begin());
   return out;
}

AssignmentMode parse_mode(const std::string& s) {
   if (s == "dynamic")
      return AssignmentMode::Dynamic;
   if (s == "static")
      return AssignmentMode::Static;
   throw py::value_error("mode must be 'dynamic' or 'static'");
}

py::dict describe(const SetupConfig& cfg) {
   py::dict d;
   d["channels"] = cfg.available;
   d["used"] = cfg.used;
   d["multiplier"] = cfg.multiplier;
   d["superblock_bits"] = cfg.superblock_bits();
   d["seed"] = cfg.seed;
   d["mode"] = cfg.mode == AssignmentMode::Static ? "static" : "dynamic";
   d["session_length"] = cfg.superblocks_per_session;
   d["moduli"] = from_naturals(cfg.moduli.moduli());
   d["cell_widths"] = cell_widths(cfg);
   return d;
}

}  // namespace

PYBIND11_MODULE(_crtmux, m) {
   m.doc() = "CRT multi-channel transmission core";

   // Kept alive for the life of the interpreter.
   static PyObject* error_type =
      py::exception<Error>(m, "Error", PyExc_ValueError).inc_ref().ptr();
   py::register_exception_translator([](std::exception_ptr p) {
      try {
         if (p)
            std::rethrow_exception(p);
      } catch (const Error& e) {
         py::object exc = py::handle(error_type)(e.what());
         exc.attr("code") = to_string(e.code());
         PyErr_SetObject(error_type, exc.ptr());
      }
   });

   m.def("crt_split", [](const py::int_& x, const std::vector<py::int_>& moduli) {
      return from_naturals(crt_split(to_natural(x), ModuliSet(to_naturals(moduli))));
   }, py::arg("x"), py::arg("moduli"));

   m.def("crt_combine", [](const std::vector<py::int_>& residues, const std::vector<py::int_>& moduli) {
      return from_natural(crt_combine(to_naturals(residues), ModuliSet(to_naturals(moduli))));
   }, py::arg("residues"), py::arg("moduli"));

   m.def("is_probable_prime", [](const py::int_& n) { return is_probable_prime(to_natural(n)); },
         py::arg("n"));

   m.def("gen_moduli", [](std::size_t bits, std::size_t channels, std::uint64_t seed, std::size_t count) {
      return from_naturals(gen_moduli(bits, channels, seed, count).moduli());
   }, py::arg("superblock_bits"), py::arg("channels"), py::arg("seed"), py::arg("count") = 0);

   m.def("bandwidth_loss", [](std::size_t block_bits, std::size_t multiplier, std::size_t channels) {
      const auto r = bandwidth_loss(block_bits, multiplier, channels);
      py::dict d;
      d["superblock_bits"] = r.superblock_bits;
      d["channels"] = r.channels;
      d["bits_per_channel"] = r.bits_per_channel;
      d["bytes_per_channel"] = r.bytes_per_channel;
      d["loss_percent"] = 100.0 * r.loss_fraction;
      return d;
   }, py::arg("block_bits"), py::arg("multiplier"), py::arg("channels"));

   m.def("s_max_estimate", &s_max_estimate, py::arg("superblock_bits"));

   m.def("distinguishability", [](std::size_t bits, const std::vector<py::int_>& moduli) {
      const auto r = distinguishability(bits, ModuliSet(to_naturals(moduli)));
      py::dict d;
      d["superblock_bits"] = r.superblock_bits;
      d["total_bits"] = r.total_bits;
      d["p_d"] = r.p_d_theoretical;
      py::list gaps;
      for (const auto& g : r.per_channel_gap)
         gaps.append(py::make_tuple(from_natural(g.modulus), from_natural(g.gap)));
      d["gaps"] = gaps;
      return d;
   }, py::arg("superblock_bits"), py::arg("moduli"));

   m.def("independence_table", [](std::uint32_t p, std::uint32_t q) {
      return independence_check(p, q).counts;
   }, py::arg("p"), py::arg("q"), "Row-major p x q joint residue counts.");

   m.def("keygen", [](std::uint16_t channels, std::uint16_t used, std::uint16_t multiplier,
                      std::uint64_t seed, const std::string& mode, const py::bytes& key,
                      const py::bytes& iv, std::uint32_t session_length) {
      CipherSuite cs;
      cs.key = fixed<16>(key, "key");
      cs.iv = fixed<16>(iv, "iv");
      return from_bytes(serialize_config(
         setup(cs, channels, used, multiplier, seed, parse_mode(mode), session_length)));
   }, py::arg("channels"), py::arg("used"), py::arg("multiplier"), py::arg("seed"),
      py::arg("mode"), py::arg("key"), py::arg("iv"),
      py::arg("session_length") = kDefaultSuperblocksPerSession,
      "Runs setup and returns the key file bytes.");

   m.def("describe_key", [](const py::bytes& key_file) {
      return describe(deserialize_config(to_bytes(key_file)));
   }, py::arg("key_file"));

   m.def("transfer", [](const py::bytes& key_file, const py::bytes& message, py::object receiver_key) {
      const auto cfg = deserialize_config(to_bytes(key_file));
      const auto rcfg =
         receiver_key.is_none() ? cfg : deserialize_config(to_bytes(receiver_key.cast<py::bytes>()));
      const Bytes msg = to_bytes(message);
      Bytes out;
      {
         py::gil_scoped_release release;
         out = transfer_in_memory(cfg, rcfg, msg);
      }
      return from_bytes(out);
   }, py::arg("key_file"), py::arg("message"), py::arg("receiver_key") = py::none(),
      "Sends a message through the in-memory channels and returns what the receiver decoded.");
}
