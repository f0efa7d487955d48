#include "ciasim/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ciasim/io.hpp"
#include "ciasim/rng.hpp"
#include "ciasim/version.hpp"
#include "json.hpp"

namespace ciasim {

using nlohmann::json;

void ChannelConfig::validate() const {
  dims.validate();
  if (!(magnitude_floor >= 0.0) || !std::isfinite(magnitude_floor))
    throw ConfigError("magnitude_floor must be a finite value >= 0");
  if (magnitude_floor >= 1.0)
    throw ConfigError("magnitude_floor must be < 1 to keep sampling practical");
  if (max_attempts < 1) throw ConfigError("max_attempts must be >= 1");
}

ChannelRealization::ChannelRealization(ChannelConfig cfg, std::vector<cdouble> coeffs)
    : cfg_(std::move(cfg)), h_(std::move(coeffs)) {
  cfg_.validate();
  offset_.assign(cfg_.dims.K + 1, 0);
  for (int r = 0; r < cfg_.dims.K; ++r)
    offset_[r + 1] = offset_[r] +
                     static_cast<std::size_t>(cfg_.dims.M) * cfg_.dims.J[r];
  if (h_.size() != offset_.back())
    throw ConfigError("coefficient count does not match the dimensions");
  if (cfg_.field == Field::Real)
    for (const cdouble& v : h_)
      if (v.imag() != 0.0)
        throw ConfigError("real channel containing a nonzero imaginary part");
}

std::size_t ChannelRealization::index(int r, int t, int s) const {
  const Dims& d = cfg_.dims;
  if (r < 0 || r >= d.K) throw std::out_of_range("receiver index out of range");
  if (t < 0 || t >= d.M) throw std::out_of_range("antenna index out of range");
  if (s < 0 || s >= d.J[r]) throw std::out_of_range("state index out of range");
  return offset_[r] + static_cast<std::size_t>(t) * d.J[r] + s;
}

cdouble ChannelRealization::coeff_c(int r, int t, int s) const {
  return h_[index(r, t, s)];
}

double ChannelRealization::coeff(int r, int t, int s) const {
  if (cfg_.field != Field::Real)
    throw ConfigError("coeff() is for real channels; use coeff_c()");
  return h_[index(r, t, s)].real();
}

ChannelRealization sample_channel(const ChannelConfig& cfg) {
  cfg.validate();
  rng::Stream stream(cfg.seed);

  std::size_t total = 0;
  for (int r = 0; r < cfg.dims.K; ++r)
    total += static_cast<std::size_t>(cfg.dims.M) * cfg.dims.J[r];

  std::vector<cdouble> drawn;
  drawn.reserve(total);
  for (std::size_t i = 0; i < total; ++i) {
    uint64_t attempts = 0;
    for (;;) {
      if (++attempts > cfg.max_attempts)
        throw ConfigError(
            "rejection sampling exhausted its attempt budget; "
            "lower magnitude_floor");
      cdouble v = cfg.field == Field::Real ? cdouble(stream.normal(), 0.0)
                                           : stream.cnormal();
      if (std::abs(v) < cfg.magnitude_floor) continue;
      if (std::find(drawn.begin(), drawn.end(), v) != drawn.end()) continue;
      drawn.push_back(v);
      break;
    }
  }
  return ChannelRealization(cfg, std::move(drawn));
}

GenericityReport validate_genericity(const ChannelRealization& ch, double tol) {
  const auto& h = ch.raw();
  GenericityReport rep;
  rep.min_abs = std::numeric_limits<double>::infinity();
  rep.min_pair_gap = std::numeric_limits<double>::infinity();

  const double floor = ch.config().magnitude_floor;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double a = std::abs(h[i]);
    rep.min_abs = std::min(rep.min_abs, a);
    if (a < floor) {
      ++rep.small_magnitudes;
      if (rep.notes.size() < 8)
        rep.notes.push_back("coefficient " + std::to_string(i) +
                            " has magnitude " + std::to_string(a) +
                            " below the floor");
    }
  }
  for (std::size_t i = 0; i < h.size(); ++i)
    for (std::size_t j = i + 1; j < h.size(); ++j) {
      const double gap = std::abs(h[i] - h[j]);
      rep.min_pair_gap = std::min(rep.min_pair_gap, gap);
      if (gap < tol) {
        ++rep.near_pairs;
        if (rep.notes.size() < 8)
          rep.notes.push_back("coefficients " + std::to_string(i) + " and " +
                              std::to_string(j) + " are only " +
                              std::to_string(gap) + " apart");
      }
    }
  rep.ok = rep.near_pairs == 0 && rep.small_magnitudes == 0;
  return rep;
}

namespace {

void require_keys(const json& obj, std::initializer_list<const char*> allowed,
                  const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known)
      throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

double finite_number(const json& v, const std::string& where) {
  if (!v.is_number())
    throw ConfigError(where + " must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(where + " must be finite");
  return x;
}

}  // namespace

std::string channel_to_json(const ChannelRealization& ch) {
  const ChannelConfig& cfg = ch.config();
  json out;
  out["format"] = "ciasim-channel/1";
  out["tool"] = {{"name", "ciasim"},
                 {"version", kVersion},
                 {"rng", rng::kAlgorithmId}};
  out["config"] = {{"M", cfg.dims.M},
                   {"K", cfg.dims.K},
                   {"J", cfg.dims.J},
                   {"field", to_string(cfg.field)},
                   {"seed", cfg.seed},
                   {"magnitude_floor", cfg.magnitude_floor}};
  json rows = json::array();
  for (int r = 0; r < cfg.dims.K; ++r) {
    json per_t = json::array();
    for (int t = 0; t < cfg.dims.M; ++t) {
      json per_s = json::array();
      for (int s = 0; s < cfg.dims.J[r]; ++s) {
        const cdouble v = ch.coeff_c(r, t, s);
        if (cfg.field == Field::Real)
          per_s.push_back(v.real());
        else
          per_s.push_back(json::array({v.real(), v.imag()}));
      }
      per_t.push_back(std::move(per_s));
    }
    rows.push_back(std::move(per_t));
  }
  out["h"] = std::move(rows);
  return out.dump(2) + "\n";
}

ChannelRealization channel_from_json(const std::string& text) {
  json in;
  try {
    in = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("channel file is not valid JSON: ") + e.what());
  }
  if (!in.is_object()) throw ConfigError("channel file must hold a JSON object");
  require_keys(in, {"format", "tool", "config", "h"}, "channel file");
  if (!in.contains("format") || in["format"] != "ciasim-channel/1")
    throw ConfigError("channel file format marker must be 'ciasim-channel/1'");
  if (!in.contains("config") || !in.contains("h"))
    throw ConfigError("channel file requires 'config' and 'h'");

  const json& c = in["config"];
  if (!c.is_object()) throw ConfigError("channel config must be an object");
  require_keys(c, {"M", "K", "J", "field", "seed", "magnitude_floor"},
               "channel config");
  ChannelConfig cfg;
  cfg.dims.M = c.at("M").get<int>();
  cfg.dims.K = c.at("K").get<int>();
  cfg.dims.J = c.at("J").get<std::vector<int>>();
  cfg.field = field_from_string(c.at("field").get<std::string>());
  cfg.seed = c.value("seed", uint64_t{0});
  cfg.magnitude_floor = c.value("magnitude_floor", 1e-3);
  cfg.validate();

  const json& rows = in["h"];
  if (!rows.is_array() || static_cast<int>(rows.size()) != cfg.dims.K)
    throw ConfigError("'h' must hold one entry per receiver");
  std::vector<cdouble> coeffs;
  for (int r = 0; r < cfg.dims.K; ++r) {
    const json& per_t = rows[r];
    if (!per_t.is_array() || static_cast<int>(per_t.size()) != cfg.dims.M)
      throw ConfigError("'h' receiver " + std::to_string(r + 1) +
                        " must hold one entry per antenna");
    for (int t = 0; t < cfg.dims.M; ++t) {
      const json& per_s = per_t[t];
      if (!per_s.is_array() || static_cast<int>(per_s.size()) != cfg.dims.J[r])
        throw ConfigError("'h' receiver " + std::to_string(r + 1) +
                          " antenna " + std::to_string(t + 1) +
                          " must hold one entry per state");
      for (int s = 0; s < cfg.dims.J[r]; ++s) {
        const json& v = per_s[s];
        const std::string where = "h[" + std::to_string(r + 1) + "][" +
                                  std::to_string(t + 1) + "][" +
                                  std::to_string(s + 1) + "]";
        if (cfg.field == Field::Real) {
          coeffs.emplace_back(finite_number(v, where), 0.0);
        } else {
          if (!v.is_array() || v.size() != 2)
            throw ConfigError(where + " must be a [re, im] pair");
          coeffs.emplace_back(finite_number(v[0], where + " re"),
                              finite_number(v[1], where + " im"));
        }
      }
    }
  }
  return ChannelRealization(cfg, std::move(coeffs));
}

ChannelRealization load_channel(const std::string& path) {
  return channel_from_json(read_file(path));
}

void save_channel(const ChannelRealization& ch, const std::string& path) {
  atomic_write(path, channel_to_json(ch));
}

}  // namespace ciasim
