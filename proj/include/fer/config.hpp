#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "fer/error.hpp"
#include "fer/fusion.hpp"
#include "fer/gabor.hpp"
#include "fer/hlda.hpp"
#include "fer/scatter.hpp"
#include "fer/svm.hpp"
#include "fer/tracker.hpp"

namespace fer {

inline const std::vector<std::string>& all_methods() {
  static const std::vector<std::string> m{"2dlda-lda", "2dhlda", "proposed", "proposed-geo",
                                          "proposed-fusion"};
  return m;
}

/// Synthetic data generator settings.
struct SynthConfig {
  int per_class = 20;
  int variants = 2;          // intensity variants per source sequence
  double motion = 2.5;       // peak displacement at full intensity, pixels
  double appearance = 0.06;  // class pattern amplitude at full intensity
  double hetero = 0.12;      // class-specific structured noise amplitude
  double noise = 0.01;       // i.i.d. pixel noise
  double identity = 1.0;     // scale of subject texture variation

  bool operator==(const SynthConfig&) const = default;
};

/// HLDA settings used inside the pipeline: a short single-start ascent,
/// since hundreds of channel fits run per fold.
inline HldaOptions pipeline_hlda() {
  HldaOptions o;
  o.max_iters = 20;
  o.multi_start = false;
  o.screen_iters = 5;
  return o;
}

struct RunConfig {
  GaborConfig gabor;
  std::size_t rows = 36;
  std::size_t cols = 48;
  std::size_t frames = 5;
  std::size_t d_r = 12;
  std::size_t d_c = 9;
  std::size_t lda_out = 20;
  HldaOptions hlda = pipeline_hlda();
  Ridge lda_ridge = Ridge::relative(100.0);
  std::size_t geo_d_r = 8;
  std::size_t geo_d_c = 2;
  Ridge geo_ridge = Ridge::relative(0.1);
  TrackerOptions tracker;
  NfTreeOptions tree;
  SvmOptions svm;
  SvmOptions fusion_svm{10.0, 1.0 / 12.0};
  int folds = 4;
  std::uint64_t seed = 1;
  SynthConfig synth;
  std::vector<std::string> methods = all_methods();

  void validate() const {
    gabor.validate();
    tracker.validate();
    tree.validate();
    svm.validate();
    fusion_svm.validate();
    auto bad = [](const std::string& m) { fail(ErrorKind::InvalidConfig, m); };
    if (rows <= gabor.kernel_size || cols <= gabor.kernel_size)
      bad("frame size must exceed gabor.kernel_size");
    if (frames < 2) bad("frames must be >= 2");
    if (d_r < 1 || d_r > rows || d_c < 1 || d_c > cols) bad("dims.d_r/d_c must fit the frame size");
    if (lda_out < 1) bad("dims.lda_out must be >= 1");
    if (geo_d_c < 1 || geo_d_c > frames - 1 || geo_d_r < 1 || geo_d_r > 2 * 113)
      bad("geo.d_r must be in [1, 226] and geo.d_c in [1, frames - 1]");
    if (hlda.max_iters < 0 || !(hlda.step > 0.0) || hlda.tol < 0.0 || hlda.screen_iters < 0)
      bad("invalid hlda options");
    if (folds < 2) bad("folds must be >= 2");
    if (synth.per_class < 1 || synth.variants < 1 || synth.variants > 4)
      bad("synth.per_class must be >= 1 and synth.variants in [1, 4]");
    if (synth.motion < 0 || synth.appearance < 0 || synth.hetero < 0 || synth.noise < 0 ||
        synth.identity < 0)
      bad("synth amplitudes must be >= 0");
    if (methods.empty()) bad("methods must not be empty");
    for (const auto& m : methods)
      if (std::find(all_methods().begin(), all_methods().end(), m) == all_methods().end())
        bad("unknown method '" + m + "'");
  }

  bool operator==(const RunConfig&) const = default;
};

namespace detail {

// Arithmetic over numbers and `pi` with + - * / and parentheses.
class ExprParser {
 public:
  explicit ExprParser(std::string_view s) : s_(s) {}

  double parse() {
    const double v = expr();
    space();
    if (pos_ != s_.size()) throw std::invalid_argument("trailing characters");
    return v;
  }

 private:
  void space() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }
  bool eat(char c) {
    space();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  double expr() {
    double v = term();
    for (;;) {
      if (eat('+'))
        v += term();
      else if (eat('-'))
        v -= term();
      else
        return v;
    }
  }
  double term() {
    double v = factor();
    for (;;) {
      if (eat('*'))
        v *= factor();
      else if (eat('/'))
        v /= factor();
      else
        return v;
    }
  }
  double factor() {
    if (eat('-')) return -factor();
    if (eat('+')) return factor();
    if (eat('(')) {
      const double v = expr();
      if (!eat(')')) throw std::invalid_argument("missing ')'");
      return v;
    }
    space();
    if (s_.substr(pos_, 2) == "pi") {
      pos_ += 2;
      return std::numbers::pi;
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), v);
    if (ec != std::errc()) throw std::invalid_argument("expected a number");
    pos_ = static_cast<std::size_t>(ptr - s_.data());
    return v;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::string fmt_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline std::string fmt_ridge(const Ridge& r) {
  if (r == Ridge::automatic()) return "auto";
  return (r.mode == Ridge::Mode::Absolute ? "abs:" : "rel:") + fmt_double(r.value);
}

}  // namespace detail

inline double parse_number(const std::string& key, const std::string& value) {
  try {
    const double v = detail::ExprParser(value).parse();
    if (!std::isfinite(v)) throw std::invalid_argument("not finite");
    return v;
  } catch (const std::invalid_argument& e) {
    fail(ErrorKind::InvalidConfig, key + ": cannot parse '" + value + "' (" + e.what() + ")");
  }
}

inline Ridge parse_ridge(const std::string& key, const std::string& value) {
  if (value == "auto") return Ridge::automatic();
  if (value.rfind("rel:", 0) == 0) return Ridge::relative(parse_number(key, value.substr(4)));
  if (value.rfind("abs:", 0) == 0) return Ridge::absolute(parse_number(key, value.substr(4)));
  fail(ErrorKind::InvalidConfig, key + ": ridge must be 'auto', 'rel:<x>' or 'abs:<x>'");
}

namespace detail {

struct ConfigField {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class T>
ConfigField count_field(T RunConfig::* member) {
  return {[member](RunConfig& c, const std::string& k, const std::string& v) {
            const double x = parse_number(k, v);
            if (!(x >= 0 && x == std::floor(x) && x < 1e9))
              fail(ErrorKind::InvalidConfig, k + ": expected a non-negative integer");
            c.*member = static_cast<T>(x);
          },
          [member](const RunConfig& c) { return std::to_string(c.*member); }};
}

template <class Get>
ConfigField int_ref(Get ref) {
  return {[ref](RunConfig& c, const std::string& k, const std::string& v) {
            const double x = parse_number(k, v);
            if (!(x == std::floor(x) && std::abs(x) < 1e9))
              fail(ErrorKind::InvalidConfig, k + ": expected an integer");
            ref(c) = static_cast<std::remove_reference_t<decltype(ref(c))>>(x);
          },
          [ref](const RunConfig& c) { return std::to_string(ref(const_cast<RunConfig&>(c))); }};
}

template <class Get>
ConfigField real_ref(Get ref) {
  return {[ref](RunConfig& c, const std::string& k, const std::string& v) {
            ref(c) = parse_number(k, v);
          },
          [ref](const RunConfig& c) { return fmt_double(ref(const_cast<RunConfig&>(c))); }};
}

template <class Get>
ConfigField ridge_ref(Get ref) {
  return {[ref](RunConfig& c, const std::string& k, const std::string& v) {
            ref(c) = parse_ridge(k, v);
          },
          [ref](const RunConfig& c) { return fmt_ridge(ref(const_cast<RunConfig&>(c))); }};
}

template <class Get>
ConfigField bool_ref(Get ref) {
  return {[ref](RunConfig& c, const std::string& k, const std::string& v) {
            if (v == "true" || v == "1")
              ref(c) = true;
            else if (v == "false" || v == "0")
              ref(c) = false;
            else
              fail(ErrorKind::InvalidConfig, k + ": expected true or false");
          },
          [ref](const RunConfig& c) {
            return std::string(ref(const_cast<RunConfig&>(c)) ? "true" : "false");
          }};
}

template <class Get>
ConfigField real_list_ref(Get ref) {
  return {[ref](RunConfig& c, const std::string& k, const std::string& v) {
            std::vector<double> out;
            for (const auto& item : split_list(v)) out.push_back(parse_number(k, item));
            ref(c) = std::move(out);
          },
          [ref](const RunConfig& c) {
            std::string s;
            for (double x : ref(const_cast<RunConfig&>(c)))
              s += (s.empty() ? "" : ", ") + fmt_double(x);
            return s;
          }};
}

#define FER_REF(expr) [](RunConfig& c) -> auto& { return c.expr; }

inline const std::vector<std::pair<std::string, ConfigField>>& config_fields() {
  static const std::vector<std::pair<std::string, ConfigField>> fields{
      {"gabor.scales", real_list_ref(FER_REF(gabor.scales))},
      {"gabor.orientations", real_list_ref(FER_REF(gabor.orientations))},
      {"gabor.sigma", real_ref(FER_REF(gabor.sigma))},
      {"gabor.kernel_size", int_ref(FER_REF(gabor.kernel_size))},
      {"frame.rows", count_field(&RunConfig::rows)},
      {"frame.cols", count_field(&RunConfig::cols)},
      {"frame.count", count_field(&RunConfig::frames)},
      {"dims.d_r", count_field(&RunConfig::d_r)},
      {"dims.d_c", count_field(&RunConfig::d_c)},
      {"dims.lda_out", count_field(&RunConfig::lda_out)},
      {"hlda.max_iters", int_ref(FER_REF(hlda.max_iters))},
      {"hlda.step", real_ref(FER_REF(hlda.step))},
      {"hlda.tol", real_ref(FER_REF(hlda.tol))},
      {"hlda.ridge", ridge_ref(FER_REF(hlda.ridge))},
      {"hlda.multi_start", bool_ref(FER_REF(hlda.multi_start))},
      {"hlda.screen_iters", int_ref(FER_REF(hlda.screen_iters))},
      {"lda.ridge", ridge_ref(FER_REF(lda_ridge))},
      {"geo.d_r", count_field(&RunConfig::geo_d_r)},
      {"geo.d_c", count_field(&RunConfig::geo_d_c)},
      {"geo.ridge", ridge_ref(FER_REF(geo_ridge))},
      {"tracker.levels", int_ref(FER_REF(tracker.levels))},
      {"tracker.window", int_ref(FER_REF(tracker.window))},
      {"tracker.max_iters", int_ref(FER_REF(tracker.max_iters))},
      {"tracker.eps", real_ref(FER_REF(tracker.eps))},
      {"tracker.min_eig_factor", real_ref(FER_REF(tracker.min_eig_factor))},
      {"tree.depth", int_ref(FER_REF(tree.depth))},
      {"tree.epochs", int_ref(FER_REF(tree.epochs))},
      {"tree.lr", real_ref(FER_REF(tree.lr))},
      {"svm.c", real_ref(FER_REF(svm.c))},
      {"svm.gamma", real_ref(FER_REF(svm.gamma))},
      {"svm.tol", real_ref(FER_REF(svm.tol))},
      {"fusion.svm.c", real_ref(FER_REF(fusion_svm.c))},
      {"fusion.svm.gamma", real_ref(FER_REF(fusion_svm.gamma))},
      {"fusion.svm.tol", real_ref(FER_REF(fusion_svm.tol))},
      {"cv.folds", int_ref(FER_REF(folds))},
      {"seed", int_ref(FER_REF(seed))},
      {"synth.per_class", int_ref(FER_REF(synth.per_class))},
      {"synth.variants", int_ref(FER_REF(synth.variants))},
      {"synth.motion", real_ref(FER_REF(synth.motion))},
      {"synth.appearance", real_ref(FER_REF(synth.appearance))},
      {"synth.hetero", real_ref(FER_REF(synth.hetero))},
      {"synth.noise", real_ref(FER_REF(synth.noise))},
      {"synth.identity", real_ref(FER_REF(synth.identity))},
      {"methods",
       {[](RunConfig& c, const std::string&, const std::string& v) { c.methods = split_list(v); },
        [](const RunConfig& c) {
          std::string s;
          for (const auto& m : c.methods) s += (s.empty() ? "" : ", ") + m;
          return s;
        }}},
  };
  return fields;
}

#undef FER_REF

}  // namespace detail

/// Applies one `key = value` assignment.
inline void set_config_value(RunConfig& config, const std::string& key, const std::string& value) {
  for (const auto& [name, field] : detail::config_fields())
    if (name == key) {
      field.set(config, key, value);
      return;
    }
  fail(ErrorKind::InvalidConfig, "unknown config key '" + key + "'");
}

/// Flat `key = value` lines; `#` starts a comment. Unset keys keep their
/// defaults. The result is validated.
inline RunConfig parse_config(std::istream& in, const std::string& name = "config") {
  RunConfig config;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      fail(ErrorKind::InvalidConfig,
           name + ":" + std::to_string(lineno) + ": expected key = value");
    try {
      set_config_value(config, detail::trim(t.substr(0, eq)), detail::trim(t.substr(eq + 1)));
    } catch (const Error& e) {
      fail(ErrorKind::InvalidConfig, name + ":" + std::to_string(lineno) + ": " + e.message());
    }
  }
  config.validate();
  return config;
}

inline RunConfig parse_config_text(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::InvalidConfig, "cannot open config '" + path + "'");
  return parse_config(in, path);
}

/// Every key with its current value; parse_config_text(config_to_text(c)) == c.
inline std::string config_to_text(const RunConfig& config) {
  std::string out;
  for (const auto& [name, field] : detail::config_fields())
    out += name + " = " + field.get(config) + "\n";
  return out;
}

}  // namespace fer
