#pragma once

#include <json.hpp>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <variant>

#include "tpmg/geometry.hpp"
#include "tpmg/profiles.hpp"
#include "tpmg/types.hpp"

namespace tpmg {

enum class ArrayEncoding { decimal, base64_f64le };

using LoadedProfiles = std::variant<ProfileSet<double>, FactorizedProfileSet<double>>;

namespace detail {

inline std::string fingerprint_hex(std::uint64_t fp) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << fp;
  return os.str();
}

inline constexpr char kB64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

inline std::string base64_encode(const double* data, std::size_t count) {
  const auto* bytes = reinterpret_cast<const unsigned char*>(data);
  const std::size_t n = count * sizeof(double);
  std::string out;
  out.reserve((n + 2) / 3 * 4);
  for (std::size_t i = 0; i < n; i += 3) {
    unsigned v = bytes[i] << 16;
    if (i + 1 < n) v |= bytes[i + 1] << 8;
    if (i + 2 < n) v |= bytes[i + 2];
    out.push_back(kB64Alphabet[(v >> 18) & 63]);
    out.push_back(kB64Alphabet[(v >> 12) & 63]);
    out.push_back(i + 1 < n ? kB64Alphabet[(v >> 6) & 63] : '=');
    out.push_back(i + 2 < n ? kB64Alphabet[v & 63] : '=');
  }
  return out;
}

inline std::vector<double> base64_decode_f64(const std::string& s) {
  std::array<int, 256> rev;
  rev.fill(-1);
  for (int i = 0; i < 64; ++i) rev[static_cast<unsigned char>(kB64Alphabet[i])] = i;
  std::vector<unsigned char> bytes;
  bytes.reserve(s.size() / 4 * 3);
  unsigned acc = 0;
  int bits = 0;
  for (char ch : s) {
    if (ch == '=' || ch == '\n' || ch == '\r') continue;
    const int v = rev[static_cast<unsigned char>(ch)];
    if (v < 0) throw shape_error("profile file: invalid base64 payload");
    acc = (acc << 6) | static_cast<unsigned>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      bytes.push_back(static_cast<unsigned char>((acc >> bits) & 0xff));
    }
  }
  if (bytes.size() % sizeof(double) != 0)
    throw shape_error("profile file: base64 payload is not a multiple of 8 bytes");
  std::vector<double> out(bytes.size() / sizeof(double));
  std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

inline nlohmann::json encode_array(const double* data, Index count, ArrayEncoding enc) {
  if (enc == ArrayEncoding::base64_f64le)
    return base64_encode(data, static_cast<std::size_t>(count));
  nlohmann::json arr = nlohmann::json::array();
  for (Index i = 0; i < count; ++i) arr.push_back(data[i]);
  return arr;
}

inline void decode_array(const nlohmann::json& node, bool base64, const std::string& name,
                         double* out, Index expected) {
  std::vector<double> values;
  if (base64) {
    if (!node.is_string()) throw shape_error("profile file: array '" + name + "' not base64");
    values = base64_decode_f64(node.get<std::string>());
  } else {
    if (!node.is_array()) throw shape_error("profile file: array '" + name + "' missing");
    values.reserve(node.size());
    for (const auto& x : node) {
      if (!x.is_number())
        throw nonfinite_error("profile file: non-numeric entry in '" + name + "'");
      values.push_back(x.get<double>());
    }
  }
  if (static_cast<Index>(values.size()) != expected)
    throw shape_error("profile file: array '" + name + "' has " +
                      std::to_string(values.size()) + " entries, expected " +
                      std::to_string(expected));
  for (double v : values)
    if (!std::isfinite(v))
      throw nonfinite_error("profile file: non-finite value in '" + name + "'");
  std::memcpy(out, values.data(), values.size() * sizeof(double));
}

template <typename Derived>
nlohmann::json encode_eigen(const Eigen::MatrixBase<Derived>& m, ArrayEncoding enc) {
  // Eigen default storage is column-major, which matches the declared layout.
  return encode_array(m.derived().eval().data(), m.size(), enc);
}

inline nlohmann::json grid_header(const HorizontalGrid<double>& grid, Index n_r) {
  return {{"type", "icosahedral"},
          {"level", grid.level},
          {"n_r", n_r},
          {"fingerprint", fingerprint_hex(grid_fingerprint(grid))}};
}

}  // namespace detail

inline void save_profiles(const ProfileSet<double>& p, const std::string& path,
                          const HorizontalGrid<double>& grid,
                          ArrayEncoding enc = ArrayEncoding::decimal) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["kind"] = "full";
  j["grid"] = detail::grid_header(grid, p.n_r());
  j["layout"] = "column-major, k fastest";
  if (enc == ArrayEncoding::base64_f64le) j["encoding"] = "base64-f64le";
  j["arrays"] = {{"beta", detail::encode_array(p.beta.data(), p.beta.size(), enc)},
                 {"alpha_s", detail::encode_array(p.alpha_s.data(), p.alpha_s.size(), enc)},
                 {"alpha_r", detail::encode_array(p.alpha_r.data(), p.alpha_r.size(), enc)},
                 {"xi_r", detail::encode_array(p.xi_r.data(), p.xi_r.size(), enc)}};
  std::ofstream os(path);
  if (!os) throw config_error("cannot write profile file: " + path);
  os << j.dump(1) << "\n";
}

inline void save_profiles(const FactorizedProfileSet<double>& p, const std::string& path,
                          const HorizontalGrid<double>& grid,
                          ArrayEncoding enc = ArrayEncoding::decimal) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["kind"] = "factorized";
  j["grid"] = detail::grid_header(grid, p.n_r());
  j["layout"] = "column-major, k fastest";
  if (enc == ArrayEncoding::base64_f64le) j["encoding"] = "base64-f64le";
  j["arrays"] = {
      {"beta_r", detail::encode_array(p.beta_r.data(), p.beta_r.size(), enc)},
      {"alpha_s_r", detail::encode_array(p.alpha_s_r.data(), p.alpha_s_r.size(), enc)},
      {"alpha_r_r", detail::encode_array(p.alpha_r_r.data(), p.alpha_r_r.size(), enc)},
      {"xi_r_r", detail::encode_array(p.xi_r_r.data(), p.xi_r_r.size(), enc)},
      {"beta_s", detail::encode_array(p.beta_s.data(), p.beta_s.size(), enc)},
      {"alpha_r_s", detail::encode_array(p.alpha_r_s.data(), p.alpha_r_s.size(), enc)},
      {"xi_r_s", detail::encode_array(p.xi_r_s.data(), p.xi_r_s.size(), enc)},
      {"alpha_s_s", detail::encode_array(p.alpha_s_s.data(), p.alpha_s_s.size(), enc)}};
  std::ofstream os(path);
  if (!os) throw config_error("cannot write profile file: " + path);
  os << j.dump(1) << "\n";
}

/// Reads a profile file and validates it against the active grid: the
/// embedded fingerprint, every array shape, and finiteness of every value.
inline LoadedProfiles load_profiles(const std::string& path,
                                    const HorizontalGrid<double>& grid,
                                    const VerticalGrid<double>& vert) {
  std::ifstream is(path);
  if (!is) throw config_error("cannot read profile file: " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw shape_error("profile file: malformed JSON: " + std::string(e.what()));
  }

  if (!j.contains("grid") || !j.contains("arrays") || !j.contains("kind"))
    throw shape_error("profile file: missing required fields");
  const auto& gj = j["grid"];
  const std::string fp = gj.value("fingerprint", "");
  if (fp != detail::fingerprint_hex(grid_fingerprint(grid)))
    throw fingerprint_error("profile file written for a different grid (fingerprint " + fp +
                            ")");
  const Index n_r = gj.value("n_r", Index(-1));
  if (n_r != vert.n_r)
    throw shape_error("profile file: n_r = " + std::to_string(n_r) + ", active grid has " +
                      std::to_string(vert.n_r));
  if (gj.value("level", -1) != grid.level)
    throw shape_error("profile file: level mismatch");

  const bool base64 = j.value("encoding", "decimal") == std::string("base64-f64le");
  const auto& arrays = j["arrays"];
  const Index ns = grid.n_cells(), ne = grid.n_edges();
  const std::string kind = j["kind"].get<std::string>();

  if (kind == "full") {
    ProfileSet<double> p;
    p.level = grid.level;
    p.beta.resize(n_r, ns);
    p.alpha_s.resize(n_r, ne);
    p.alpha_r.resize(n_r + 1, ns);
    p.xi_r.resize(n_r + 1, ns);
    detail::decode_array(arrays.value("beta", nlohmann::json()), base64, "beta",
                         p.beta.data(), p.beta.size());
    detail::decode_array(arrays.value("alpha_s", nlohmann::json()), base64, "alpha_s",
                         p.alpha_s.data(), p.alpha_s.size());
    detail::decode_array(arrays.value("alpha_r", nlohmann::json()), base64, "alpha_r",
                         p.alpha_r.data(), p.alpha_r.size());
    detail::decode_array(arrays.value("xi_r", nlohmann::json()), base64, "xi_r",
                         p.xi_r.data(), p.xi_r.size());
    return p;
  }
  if (kind == "factorized") {
    FactorizedProfileSet<double> p;
    p.level = grid.level;
    p.beta_r.resize(n_r);
    p.alpha_s_r.resize(n_r);
    p.alpha_r_r.resize(n_r + 1);
    p.xi_r_r.resize(n_r + 1);
    p.beta_s.resize(ns);
    p.alpha_r_s.resize(ns);
    p.xi_r_s.resize(ns);
    p.alpha_s_s.resize(ne);
    auto dec = [&](const char* name, Vector<double>& v) {
      detail::decode_array(arrays.value(name, nlohmann::json()), base64, name, v.data(),
                           v.size());
    };
    dec("beta_r", p.beta_r);
    dec("alpha_s_r", p.alpha_s_r);
    dec("alpha_r_r", p.alpha_r_r);
    dec("xi_r_r", p.xi_r_r);
    dec("beta_s", p.beta_s);
    dec("alpha_r_s", p.alpha_r_s);
    dec("xi_r_s", p.xi_r_s);
    dec("alpha_s_s", p.alpha_s_s);
    return p;
  }
  throw shape_error("profile file: unknown kind '" + kind + "'");
}

}  // namespace tpmg
