#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ltrc {

/// Base class for every error raised by the library.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file or row.
class parse_error : public error {
 public:
  parse_error(std::size_t row, const std::string& what)
      : error("row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

/// Records that violate the sampling design (e.g. exit after the censoring year).
class consistency_error : public error {
 public:
  using error::error;
};

/// Parameter outside its admissible domain.
class domain_error : public error {
 public:
  using error::error;
};

/// A cause has no observed failures, so the joint fit is not identifiable.
class degenerate_data_error : public error {
 public:
  degenerate_data_error(int empty_cause, const std::string& what)
      : error(what), empty_cause_(empty_cause) {}
  int empty_cause() const noexcept { return empty_cause_; }

 private:
  int empty_cause_;
};

/// Both the fixed-point iteration and the fallback maximizer failed.
class convergence_error : public error {
 public:
  convergence_error(const std::string& what, std::vector<double> trace)
      : error(what), trace_(std::move(trace)) {}
  const std::vector<double>& trace() const noexcept { return trace_; }

 private:
  std::vector<double> trace_;
};

/// Too many bootstrap replicates could not be refitted.
class unstable_bootstrap_error : public error {
 public:
  unstable_bootstrap_error(std::size_t failed, std::size_t total)
      : error("bootstrap unstable: " + std::to_string(failed) + " of " +
              std::to_string(total) + " replicates failed"),
        failed_(failed),
        total_(total) {}
  std::size_t failed() const noexcept { return failed_; }
  std::size_t total() const noexcept { return total_; }

 private:
  std::size_t failed_;
  std::size_t total_;
};

}  // namespace ltrc
