#pragma once

// CSV artifacts. Numbers are written with 17 significant digits so every
// double round-trips exactly.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ios>
#include <istream>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "spincat/adiabatic.hpp"
#include "spincat/controls.hpp"
#include "spincat/error.hpp"
#include "spincat/metrology.hpp"
#include "spincat/propagation.hpp"
#include "spincat/spin_algebra.hpp"

namespace spincat::io {

inline constexpr int kDigits = 17;
inline constexpr std::string_view kResultsSchema = "# spincat-results v1";
inline constexpr std::string_view kResultsHeader = "N,n,chiT,theta,fidelity,restarts,seed";
inline constexpr std::string_view kReportHeader = "N,theta,fidelity,qfi,qcrb,parity,variance_jz";

namespace detail {

inline std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

inline double to_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw InvalidArgument("csv: cannot parse number '" + s + "'");
  }
  if (used != s.size()) throw InvalidArgument("csv: trailing characters in number '" + s + "'");
  return v;
}

inline std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, mode);
  if (!out) throw InvalidArgument("cannot open " + path.string() + " for writing");
  out << std::setprecision(kDigits);
  return out;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string() + " for reading");
  return in;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// State vectors: header `m,re,im`, rows m = -J..J.

inline void write_state(std::ostream& out, const StateVector& psi) {
  const auto old = out.precision(kDigits);
  const Spin s = psi.spin();
  out << "m,re,im\n";
  for (Eigen::Index i = 0; i < psi.dim(); ++i) out << s.m(i) << ',' << psi[i].real() << ',' << psi[i].imag() << '\n';
  out.precision(old);
}

inline StateVector read_state(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "m,re,im") throw InvalidArgument("state csv: missing 'm,re,im' header");
  std::vector<double> ms;
  std::vector<Complex> amps;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split(line);
    if (f.size() != 3) throw InvalidArgument("state csv: expected 3 fields in '" + line + "'");
    ms.push_back(detail::to_double(f[0]));
    amps.emplace_back(detail::to_double(f[1]), detail::to_double(f[2]));
  }
  if (amps.size() < 2) throw InvalidArgument("state csv: need at least two rows");
  const int n = static_cast<int>(amps.size()) - 1;
  for (std::size_t i = 0; i < ms.size(); ++i) {
    if (std::abs(ms[i] - (static_cast<double>(i) - 0.5 * n)) > 1e-9) throw InvalidArgument("state csv: rows must run m = -J..J");
  }
  return StateVector(n, Eigen::Map<const ComplexVector>(amps.data(), static_cast<Eigen::Index>(amps.size())));
}

inline void write_state(const std::filesystem::path& path, const StateVector& psi) {
  auto out = detail::open_out(path);
  write_state(out, psi);
}

inline StateVector read_state(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  return read_state(in);
}

/// Checkpoint dump: `t,m,re,im`, one block of N+1 rows per checkpoint.
inline void write_checkpoints(std::ostream& out, const std::vector<Checkpoint>& checkpoints) {
  const auto old = out.precision(kDigits);
  out << "t,m,re,im\n";
  for (const Checkpoint& cp : checkpoints) {
    const Spin s = cp.state.spin();
    for (Eigen::Index i = 0; i < cp.state.dim(); ++i) {
      out << cp.time << ',' << s.m(i) << ',' << cp.state[i].real() << ',' << cp.state[i].imag() << '\n';
    }
  }
  out.precision(old);
}

// ---------------------------------------------------------------------------
// Control schedules: `# N=<..> chiT=<..> n=<..>` then `k,lambda`.

inline void write_schedule(std::ostream& out, const ControlSchedule& schedule) {
  const auto old = out.precision(kDigits);
  out << "# N=" << schedule.atom_count << " chiT=" << schedule.total_time << " n=" << schedule.segments() << '\n';
  out << "k,lambda\n";
  for (std::size_t k = 0; k < schedule.segments(); ++k) out << (k + 1) << ',' << schedule.lambdas[k] << '\n';
  out.precision(old);
}

inline ControlSchedule read_schedule(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) throw InvalidArgument("schedule csv: missing '# N=.. chiT=.. n=..' line");
  ControlSchedule s;
  long declared_n = -1;
  std::istringstream meta(line.substr(2));
  std::string token;
  while (meta >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) throw InvalidArgument("schedule csv: malformed metadata '" + token + "'");
    const std::string key = token.substr(0, eq);
    const double value = detail::to_double(token.substr(eq + 1));
    if (key == "N") s.atom_count = static_cast<int>(value);
    else if (key == "chiT") s.total_time = value;
    else if (key == "n") declared_n = static_cast<long>(value);
  }
  if (!std::getline(in, line) || line != "k,lambda") throw InvalidArgument("schedule csv: missing 'k,lambda' header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split(line);
    if (f.size() != 2) throw InvalidArgument("schedule csv: expected 2 fields in '" + line + "'");
    if (static_cast<std::size_t>(detail::to_double(f[0])) != s.lambdas.size() + 1) {
      throw InvalidArgument("schedule csv: segment indices must run 1..n");
    }
    s.lambdas.push_back(detail::to_double(f[1]));
  }
  if (declared_n >= 0 && static_cast<std::size_t>(declared_n) != s.lambdas.size()) {
    throw InvalidArgument("schedule csv: n in metadata does not match the number of rows");
  }
  s.validate();
  return s;
}

inline void write_schedule(const std::filesystem::path& path, const ControlSchedule& schedule) {
  auto out = detail::open_out(path);
  write_schedule(out, schedule);
}

inline ControlSchedule read_schedule(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  return read_schedule(in);
}

// ---------------------------------------------------------------------------
// Sweeps and traces.

inline void write_trajectory(std::ostream& out, const SweepTrajectory& traj) {
  const auto old = out.precision(kDigits);
  out << "t,omega\n";
  for (std::size_t i = 0; i < traj.size(); ++i) out << traj.times[i] << ',' << traj.omegas[i] << '\n';
  out.precision(old);
}

/// `t,theta,fidelity` for one target.
inline void write_fidelity_trace(std::ostream& out, const std::vector<double>& times, double theta,
                                 const std::vector<double>& fidelity, bool header = true) {
  spincat::detail::require(times.size() == fidelity.size(), "fidelity trace: times and values differ in length");
  const auto old = out.precision(kDigits);
  if (header) out << "t,theta,fidelity\n";
  for (std::size_t i = 0; i < times.size(); ++i) out << times[i] << ',' << theta << ',' << fidelity[i] << '\n';
  out.precision(old);
}

// ---------------------------------------------------------------------------
// Metrology report rows.

inline void write_report_header(std::ostream& out) { out << kReportHeader << '\n'; }

inline void write_report_row(std::ostream& out, const MetrologyReport& r) {
  const auto old = out.precision(kDigits);
  out << r.atom_count << ',' << r.theta << ',' << r.fidelity << ',' << r.qfi << ',' << r.qcrb << ',' << r.parity << ','
      << r.variance_jz << '\n';
  out.precision(old);
}

// ---------------------------------------------------------------------------
// Append-only results ledger shared by optimization runs.

struct ResultRecord {
  int atom_count = 0;
  std::size_t segments = 0;
  double chi_t = 0.0;
  double theta = 0.0;
  double fidelity = 0.0;
  int restarts = 0;
  std::uint64_t seed = 0;
};

/// Serializes appends from concurrent writers within one process.
class ResultsLedger {
 public:
  explicit ResultsLedger(std::filesystem::path path) : path_(std::move(path)) {}

  void append(const ResultRecord& r) {
    std::scoped_lock lock(mutex_);
    const bool fresh = !std::filesystem::exists(path_) || std::filesystem::file_size(path_) == 0;
    auto out = detail::open_out(path_, std::ios::out | std::ios::app);
    if (fresh) out << kResultsSchema << '\n' << kResultsHeader << '\n';
    out << r.atom_count << ',' << r.segments << ',' << r.chi_t << ',' << r.theta << ',' << r.fidelity << ',' << r.restarts << ','
        << r.seed << '\n';
  }

  [[nodiscard]] std::vector<ResultRecord> read() const {
    auto in = detail::open_in(path_);
    std::string line;
    if (!std::getline(in, line) || line != kResultsSchema) throw InvalidArgument("results ledger: unknown schema line");
    if (!std::getline(in, line) || line != kResultsHeader) throw InvalidArgument("results ledger: unexpected header");
    std::vector<ResultRecord> out;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto f = detail::split(line);
      if (f.size() != 7) throw InvalidArgument("results ledger: expected 7 fields in '" + line + "'");
      ResultRecord r;
      r.atom_count = static_cast<int>(detail::to_double(f[0]));
      r.segments = static_cast<std::size_t>(detail::to_double(f[1]));
      r.chi_t = detail::to_double(f[2]);
      r.theta = detail::to_double(f[3]);
      r.fidelity = detail::to_double(f[4]);
      r.restarts = static_cast<int>(detail::to_double(f[5]));
      r.seed = std::stoull(f[6]);
      out.push_back(r);
    }
    return out;
  }

  [[nodiscard]] const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::mutex mutex_;
};

}  // namespace spincat::io
