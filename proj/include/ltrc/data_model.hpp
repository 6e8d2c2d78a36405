#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ltrc/errors.hpp"

namespace ltrc {

/// Cause indicator of a unit: censored, or the cause that produced the failure.
enum class Cause : std::uint8_t { censored = 0, first = 1, second = 2 };

/// Truncation indicator. `truncated` units are only observed because they
/// survived past their left-truncation time.
enum class Truncation : std::uint8_t { truncated = 0, none = 1 };

inline int to_int(Cause c) { return static_cast<int>(c); }
inline int to_int(Truncation nu) { return static_cast<int>(nu); }

/// One unit on test, with times measured from its own installation.
struct Observation {
  double t = 0.0;      ///< lifetime, or censoring time when censored
  double tau_L = 0.0;  ///< left-truncation time; only meaningful when truncated
  double tau_R = 0.0;  ///< right-censoring time
  Cause delta = Cause::censored;
  Truncation nu = Truncation::none;

  bool truncated() const { return nu == Truncation::truncated; }
  bool failed() const { return delta != Cause::censored; }
};

/// Throws domain_error naming the first violated invariant.
inline void validate(const Observation& o) {
  auto fail = [](const char* msg) { throw domain_error(std::string("invalid observation: ") + msg); };
  if (!(std::isfinite(o.t) && o.t > 0.0)) fail("t must be positive");
  if (!(std::isfinite(o.tau_R) && o.tau_R > 0.0)) fail("tau_R must be positive");
  switch (o.delta) {
    case Cause::censored:
      if (o.t != o.tau_R) fail("censored unit must have t == tau_R");
      break;
    case Cause::first:
    case Cause::second:
      if (!(o.t < o.tau_R)) fail("failed unit must have t < tau_R");
      break;
    default:
      fail("delta must be 0, 1 or 2");
  }
  if (o.nu == Truncation::truncated) {
    if (!(o.tau_L > 0.0 && o.tau_L < o.t)) fail("truncated unit needs 0 < tau_L < t");
    if (!(o.tau_L < o.tau_R)) fail("truncated unit needs tau_L < tau_R");
  } else if (o.nu != Truncation::none) {
    fail("nu must be 0 or 1");
  }
}

/// Immutable, validated collection of observations with the index sets of
/// censored units and failures by cause. Log-times are cached for the
/// likelihood sums.
class Dataset {
 public:
  Dataset() = default;

  explicit Dataset(std::vector<Observation> observations) : obs_(std::move(observations)) {
    for (std::size_t i = 0; i < obs_.size(); ++i) {
      const Observation& o = obs_[i];
      validate(o);
      const double lt = std::log(o.t);
      max_log_t_ = std::max(max_log_t_, lt);
      if (o.truncated()) {
        trunc_log_t_.push_back(lt);
        trunc_log_tau_.push_back(std::log(o.tau_L));
      } else {
        plain_log_t_.push_back(lt);
      }
      switch (o.delta) {
        case Cause::censored: index0_.push_back(i); break;
        case Cause::first:
          index1_.push_back(i);
          log_sum1_ += lt;
          break;
        case Cause::second:
          index2_.push_back(i);
          log_sum2_ += lt;
          break;
      }
    }
    if (obs_.empty()) max_log_t_ = 0.0;
  }

  std::span<const Observation> observations() const { return obs_; }
  const Observation& operator[](std::size_t i) const { return obs_[i]; }
  std::size_t n() const { return obs_.size(); }
  std::size_t m1() const { return index1_.size(); }
  std::size_t m2() const { return index2_.size(); }
  std::size_t m() const { return index1_.size() + index2_.size(); }
  std::size_t failures(int cause) const { return cause == 1 ? m1() : m2(); }

  /// 0-based index sets: censored, cause 1, cause 2.
  std::span<const std::size_t> censored_indices() const { return index0_; }
  std::span<const std::size_t> cause1_indices() const { return index1_; }
  std::span<const std::size_t> cause2_indices() const { return index2_; }

  /// Sum of log failure times over all failures.
  double w1() const { return log_sum1_ + log_sum2_; }
  /// Sum of log failure times over failures from one cause.
  double log_failure_sum(int cause) const { return cause == 1 ? log_sum1_ : log_sum2_; }

  // Cached log-times for the w2 sums.
  double max_log_t() const { return max_log_t_; }
  std::span<const double> plain_log_t() const { return plain_log_t_; }
  std::span<const double> truncated_log_t() const { return trunc_log_t_; }
  std::span<const double> truncated_log_tau() const { return trunc_log_tau_; }

 private:
  std::vector<Observation> obs_;
  std::vector<std::size_t> index0_, index1_, index2_;
  std::vector<double> plain_log_t_, trunc_log_t_, trunc_log_tau_;
  double max_log_t_ = -std::numeric_limits<double>::infinity();
  double log_sum1_ = 0.0;
  double log_sum2_ = 0.0;
};

/// Multiplies every time (t, tau_L, tau_R) by `factor`.
inline Dataset rescale(const Dataset& data, double factor) {
  if (!(factor > 0.0)) throw domain_error("rescale factor must be positive");
  std::vector<Observation> out(data.observations().begin(), data.observations().end());
  for (Observation& o : out) {
    o.t *= factor;
    o.tau_R *= factor;
    if (o.truncated()) o.tau_L *= factor;
  }
  return Dataset(std::move(out));
}

/// One row of the transformer table in calendar years.
struct RawTransformerRecord {
  int serial = 0;
  int install_year = 0;
  int exit_year = 0;
  Truncation nu = Truncation::none;
  Cause delta = Cause::censored;

  friend bool operator==(const RawTransformerRecord&, const RawTransformerRecord&) = default;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline bool parse_int(std::string_view s, int& out) {
  s = trim(s);
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace detail

/// Parses `sn,install_year,exit_year,nu,delta` rows. A header line is
/// accepted only as the first non-empty line. Row numbers in errors are
/// 1-based physical line numbers.
inline std::vector<RawTransformerRecord> parse_transformer_csv(std::istream& in) {
  std::vector<RawTransformerRecord> records;
  std::string line;
  std::size_t line_no = 0;
  bool seen_content = false;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = detail::trim(line);
    if (line_no == 1 && view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);
    if (view.empty()) continue;
    auto fields = detail::split_commas(view);
    int first = 0;
    if (!seen_content && !detail::parse_int(fields[0], first)) {
      seen_content = true;  // header
      continue;
    }
    seen_content = true;
    if (fields.size() != 5) {
      throw parse_error(line_no, "expected 5 fields, found " + std::to_string(fields.size()));
    }
    int v[5];
    for (int k = 0; k < 5; ++k) {
      if (!detail::parse_int(fields[k], v[k])) {
        throw parse_error(line_no, "field " + std::to_string(k + 1) + " is not an integer");
      }
    }
    if (v[3] != 0 && v[3] != 1) throw parse_error(line_no, "nu must be 0 or 1");
    if (v[4] < 0 || v[4] > 2) throw parse_error(line_no, "delta must be 0, 1 or 2");
    records.push_back({v[0], v[1], v[2], static_cast<Truncation>(v[3]), static_cast<Cause>(v[4])});
  }
  return records;
}

inline std::vector<RawTransformerRecord> parse_transformer_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error("cannot open " + path.string());
  return parse_transformer_csv(in);
}

/// Converts calendar-year records to unit-relative times divided by `scale`.
inline Dataset to_dataset(std::span<const RawTransformerRecord> records, int truncation_year,
                          int censor_year, double scale) {
  if (!(scale > 0.0)) throw domain_error("scale must be positive");
  std::vector<Observation> obs;
  obs.reserve(records.size());
  for (const RawTransformerRecord& r : records) {
    auto fail = [&](const std::string& msg) {
      throw consistency_error("record " + std::to_string(r.serial) + ": " + msg);
    };
    if (r.exit_year > censor_year) fail("exit year after the censoring year");
    if (r.exit_year <= r.install_year) fail("exit year must follow the installation year");
    if (r.nu == Truncation::truncated && r.install_year >= truncation_year) {
      fail("truncated unit installed on or after the truncation year");
    }
    if (r.nu == Truncation::none && r.install_year < truncation_year) {
      fail("untruncated unit installed before the truncation year");
    }
    if (r.delta == Cause::censored && r.exit_year != censor_year) {
      fail("censored unit must exit at the censoring year");
    }
    if (r.delta != Cause::censored && r.exit_year >= censor_year) {
      fail("failure recorded at or after the censoring year");
    }
    Observation o;
    o.t = (r.exit_year - r.install_year) / scale;
    o.tau_R = (censor_year - r.install_year) / scale;
    o.tau_L = (truncation_year - r.install_year) / scale;
    o.delta = r.delta;
    o.nu = r.nu;
    if (o.delta == Cause::censored) o.t = o.tau_R;
    obs.push_back(o);
  }
  return Dataset(std::move(obs));
}

inline constexpr int kTransformerTruncationYear = 1980;
inline constexpr int kTransformerCensorYear = 2008;
inline constexpr double kTransformerScale = 100.0;

}  // namespace ltrc
