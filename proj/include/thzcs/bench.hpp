#pragma once

// Trial harness: for every (solver, n, cr, matrix kind, trial) cell generate a
// phantom and a fresh sensing matrix, acquire, solve, and record SNR and the
// solve wall time.

#include "thzcs/acquisition.hpp"
#include "thzcs/bsbl.hpp"
#include "thzcs/config.hpp"
#include "thzcs/ista.hpp"
#include "thzcs/metrics.hpp"
#include "thzcs/phantom.hpp"
#include "thzcs/rng.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

namespace thzcs {

enum class SolverId { Bsbl, Ista };

inline const char* to_string(SolverId s) { return s == SolverId::Bsbl ? "bsbl" : "ista"; }

inline SolverId parse_solver(std::string_view s) {
  if (s == "bsbl") return SolverId::Bsbl;
  if (s == "ista") return SolverId::Ista;
  throw Error(ErrorCode::InvalidConfig, "unknown solver '" + std::string(s) + "' (bsbl|ista)");
}

/// "gaussian" or "bernoulli<k>", e.g. "bernoulli5".
struct MatrixKind {
  SensingKind kind = SensingKind::ComplexGaussian;
  int k = 0;

  std::string name() const {
    return kind == SensingKind::ComplexGaussian ? "gaussian" : "bernoulli" + std::to_string(k);
  }
  friend bool operator==(const MatrixKind&, const MatrixKind&) = default;
};

inline MatrixKind parse_matrix_kind(std::string_view s) {
  if (s == "gaussian") return {};
  constexpr std::string_view prefix = "bernoulli";
  if (s.starts_with(prefix)) {
    const auto digits = s.substr(prefix.size());
    int k = 0;
    auto res = std::from_chars(digits.data(), digits.data() + digits.size(), k);
    if (!digits.empty() && res.ec == std::errc() && res.ptr == digits.data() + digits.size() && k >= 1)
      return {SensingKind::BernoulliK, k};
  }
  throw Error(ErrorCode::InvalidConfig, "unknown matrix kind '" + std::string(s) + "' (gaussian|bernoulli<k>)");
}

/// Draws the sensing matrix of one cell.
inline SensingMatrix gen_sensing(const MatrixKind& kind, Index m, Index n, std::uint64_t seed) {
  if (kind.kind == SensingKind::ComplexGaussian) return gen_gaussian_complex(m, n, seed);
  return gen_bernoulli_k(m, n, kind.k, seed);
}

struct BenchConfig {
  std::size_t trials = 50;
  std::vector<Index> sizes{64};
  std::vector<double> crs{0.5, 0.7, 0.9};
  std::vector<MatrixKind> matrix_kinds{MatrixKind{}};
  std::vector<SolverId> solvers{SolverId::Bsbl};
  std::uint64_t base_seed = 1;
  Index block_size = 4;
  /// Built-in name; ignored when `custom` is set.
  std::string phantom = "s0";
  std::optional<PhantomSpec> custom;
  double beta_scale = 0.01;
  double eta = 1e-4;
  Transform transform = Transform::None;
  /// Measurement SNR in dB; unset means noiseless.
  std::optional<double> noise_snr;
  std::size_t threads = 1;

  void validate() const {
    if (trials < 1) throw Error(ErrorCode::InvalidConfig, "trials must be >= 1");
    if (sizes.empty() || crs.empty() || matrix_kinds.empty() || solvers.empty())
      throw Error(ErrorCode::InvalidConfig, "sizes, crs, matrix_kinds and solvers must be nonempty");
    for (double cr : crs)
      if (!(cr >= 0.0 && cr < 1.0)) throw Error(ErrorCode::InvalidConfig, "every cr must lie in [0, 1)");
    for (Index n : sizes)
      if (n < 8) throw Error(ErrorCode::InvalidConfig, "every size must be >= 8");
    if (block_size < 1) throw Error(ErrorCode::InvalidConfig, "block_size must be >= 1");
    if (!(beta_scale > 0.0)) throw Error(ErrorCode::InvalidConfig, "beta_scale must be > 0");
    if (!(eta > 0.0)) throw Error(ErrorCode::InvalidConfig, "eta must be > 0");
    if (threads < 1) throw Error(ErrorCode::InvalidConfig, "threads must be >= 1");
    if (!custom) builtin_phantom(phantom, 64);
    else custom->validate();
  }

  PhantomSpec phantom_spec(Index n) const {
    if (!custom) return builtin_phantom(phantom, n);
    PhantomSpec spec = *custom;
    spec.size = n;
    return spec;
  }

  SolveOptions solve_options() const {
    SolveOptions o;
    o.block_size = block_size;
    o.eta = eta;
    o.beta_scale = beta_scale;
    o.transform = transform;
    return o;
  }
};

struct ResultRecord {
  SolverId solver = SolverId::Bsbl;
  Index n = 0;
  double cr = 0.0;
  MatrixKind matrix_kind;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  double snr_db = std::numeric_limits<double>::quiet_NaN();
  double wall_time_s = 0.0;
  bool failed = false;
};

/// Seed of one cell. The solver is deliberately not hashed so every solver in
/// a cell sees the same phantom and sensing matrix.
inline std::uint64_t cell_seed(std::uint64_t base, Index n, double cr, const MatrixKind& kind, std::size_t trial) {
  std::uint64_t s = mix_seed(base, static_cast<std::uint64_t>(n));
  s = mix_seed(s, std::bit_cast<std::uint64_t>(cr));
  s = mix_seed(s, (static_cast<std::uint64_t>(kind.kind) << 32) | static_cast<std::uint32_t>(kind.k));
  return mix_seed(s, trial);
}

/// One benchmark cell end to end. Returns the solver report when the solve
/// succeeded.
inline std::optional<SolveReport> run_cell(const BenchConfig& cfg, ResultRecord& rec) {
  rec.seed = cell_seed(cfg.base_seed, rec.n, rec.cr, rec.matrix_kind, rec.trial);
  try {
    const ComplexImage x = gen_phantom(cfg.phantom_spec(rec.n), rec.seed);
    const Index m = m_for_cr(rec.n, rec.cr);
    const SensingMatrix phi = gen_sensing(rec.matrix_kind, m, rec.n, mix_seed(rec.seed, 1));
    MeasurementMatrix y = acquire_scan(phi, x);
    if (cfg.noise_snr) y = add_awgn(y, *cfg.noise_snr, mix_seed(rec.seed, 2));
    SolveReport report;
    if (rec.solver == SolverId::Bsbl) {
      report = solve_bmmv(y, phi, cfg.solve_options());
    } else {
      IstaOptions io;
      io.transform = cfg.transform;
      report = solve_ista_columnwise(y, phi, io);
    }
    rec.wall_time_s = report.wall_time;
    rec.snr_db = snr_db(x, report.estimate).value();
    return report;
  } catch (const std::exception&) {
    rec.failed = true;
    rec.snr_db = std::numeric_limits<double>::quiet_NaN();
    return std::nullopt;
  }
}

/// Called once per finished cell (serialized across threads).
using CellObserver = std::function<void(const ResultRecord&, const SolveReport*)>;

/// Records ordered by (solver, n, cr, matrix kind, trial) in config order,
/// independent of the thread count.
inline std::vector<ResultRecord> run_benchmark(const BenchConfig& cfg, const CellObserver& observer = {}) {
  cfg.validate();
  std::vector<ResultRecord> records;
  for (auto solver : cfg.solvers)
    for (auto n : cfg.sizes)
      for (auto cr : cfg.crs)
        for (const auto& kind : cfg.matrix_kinds)
          for (std::size_t t = 0; t < cfg.trials; ++t) {
            ResultRecord r;
            r.solver = solver;
            r.n = n;
            r.cr = cr;
            r.matrix_kind = kind;
            r.trial = t;
            records.push_back(r);
          }
  std::mutex observer_mutex;
  auto work = [&](std::size_t i) {
    auto report = run_cell(cfg, records[i]);
    if (observer) {
      std::lock_guard lock(observer_mutex);
      observer(records[i], report ? &*report : nullptr);
    }
  };
  const std::size_t threads = std::min(cfg.threads, records.size());
  if (threads <= 1) {
    for (std::size_t i = 0; i < records.size(); ++i) work(i);
    return records;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < records.size(); i = next++) work(i);
    });
  for (auto& th : pool) th.join();
  return records;
}

struct SummaryRow {
  SolverId solver = SolverId::Bsbl;
  Index n = 0;
  double cr = 0.0;
  MatrixKind matrix_kind;
  std::size_t trials = 0;
  double mean_snr_db = std::numeric_limits<double>::quiet_NaN();
  double mean_wall_time_s = std::numeric_limits<double>::quiet_NaN();
  double success_rate = 0.0;
  /// Mean wall time relative to BSBL in the same (n, cr, kind) cell; NaN when
  /// BSBL did not run there.
  double speedup = std::numeric_limits<double>::quiet_NaN();
};

/// Per-cell aggregates in order of first appearance. Failed trials are
/// excluded from the means.
inline std::vector<SummaryRow> summarize(const std::vector<ResultRecord>& records) {
  if (records.empty()) throw Error(ErrorCode::EmptyInput, "no records to summarize");
  using Key = std::tuple<int, Index, double, int, int>;
  auto key_of = [](const ResultRecord& r) {
    return Key{static_cast<int>(r.solver), r.n, r.cr, static_cast<int>(r.matrix_kind.kind), r.matrix_kind.k};
  };
  std::vector<SummaryRow> rows;
  std::map<Key, std::size_t> index;
  std::vector<std::pair<double, double>> sums;  // snr, time over successes
  std::vector<std::size_t> ok;
  for (const auto& r : records) {
    auto [it, fresh] = index.try_emplace(key_of(r), rows.size());
    if (fresh) {
      SummaryRow row;
      row.solver = r.solver;
      row.n = r.n;
      row.cr = r.cr;
      row.matrix_kind = r.matrix_kind;
      rows.push_back(row);
      sums.emplace_back(0.0, 0.0);
      ok.push_back(0);
    }
    const auto i = it->second;
    ++rows[i].trials;
    if (!r.failed) {
      sums[i].first += r.snr_db;
      sums[i].second += r.wall_time_s;
      ++ok[i];
    }
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].success_rate = static_cast<double>(ok[i]) / static_cast<double>(rows[i].trials);
    if (ok[i] > 0) {
      rows[i].mean_snr_db = sums[i].first / static_cast<double>(ok[i]);
      rows[i].mean_wall_time_s = sums[i].second / static_cast<double>(ok[i]);
    }
  }
  for (auto& row : rows) {
    Key bsbl{static_cast<int>(SolverId::Bsbl), row.n, row.cr, static_cast<int>(row.matrix_kind.kind),
             row.matrix_kind.k};
    auto it = index.find(bsbl);
    if (it != index.end()) row.speedup = row.mean_wall_time_s / rows[it->second].mean_wall_time_s;
  }
  return rows;
}

namespace bench_detail {

/// Shortest round-trip text; identical doubles give identical bytes.
inline std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace bench_detail

inline constexpr std::string_view kRecordsHeader = "solver,n,cr,matrix_kind,trial,seed,snr_db,wall_time_s,failed";

inline void write_records_csv(std::ostream& out, const std::vector<ResultRecord>& records) {
  using bench_detail::fmt;
  out << kRecordsHeader << '\n';
  for (const auto& r : records)
    out << to_string(r.solver) << ',' << r.n << ',' << fmt(r.cr) << ',' << r.matrix_kind.name() << ',' << r.trial
        << ',' << r.seed << ',' << fmt(r.snr_db) << ',' << fmt(r.wall_time_s) << ',' << (r.failed ? 1 : 0)
        << '\n';
}

inline void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  using bench_detail::fmt;
  out << "solver,n,cr,matrix_kind,trials,mean_snr_db,mean_wall_time_s,success_rate,speedup\n";
  for (const auto& s : rows)
    out << to_string(s.solver) << ',' << s.n << ',' << fmt(s.cr) << ',' << s.matrix_kind.name() << ','
        << s.trials << ',' << fmt(s.mean_snr_db) << ',' << fmt(s.mean_wall_time_s) << ','
        << fmt(s.success_rate) << ',' << fmt(s.speedup) << '\n';
}

inline void write_summary_table(std::ostream& out, const std::vector<SummaryRow>& rows) {
  char line[160];
  std::snprintf(line, sizeof line, "%-6s %5s %6s %-12s %6s %10s %12s %8s %8s\n", "solver", "n", "cr", "matrix",
                "trials", "snr_db", "time_s", "success", "speedup");
  out << line;
  for (const auto& s : rows) {
    std::snprintf(line, sizeof line, "%-6s %5lld %6.3f %-12s %6zu %10.3f %12.6f %8.3f %8.3f\n", to_string(s.solver),
                  static_cast<long long>(s.n), s.cr, s.matrix_kind.name().c_str(), s.trials, s.mean_snr_db,
                  s.mean_wall_time_s, s.success_rate, s.speedup);
    out << line;
  }
}

/// Reads a bench config file. Schema:
///
///   [bench]
///   trials = 50
///   sizes = [64]
///   crs = [0.5, 0.7, 0.9]
///   matrix_kinds = ["gaussian", "bernoulli5"]
///   solvers = ["bsbl", "ista"]
///   base_seed = 1
///   block_size = 4
///   beta_scale = 0.01
///   eta = 1e-4
///   transform = "none"        # or "dft"
///   noise_snr = 30.0          # optional, dB
///   threads = 1
///
///   [phantom]
///   name = "s0"               # s0 | s1 | s2 | custom
///   blur_sigma = 1.5          # custom only
///
///   [[shape]]                 # custom only, repeatable
///   kind = "rect"             # rect | disk | cross | ring
///   center = [0.5, 0.5]       # (row, col) fractions
///   extent = 0.1
///   amplitude = [1.0, 0.0]    # (re, im)
inline BenchConfig bench_config_from(const ConfigDocument& doc) {
  BenchConfig cfg;
  for (const auto& [name, table] : doc.tables)
    if (name != "" && name != "bench" && name != "phantom")
      throw Error(ErrorCode::InvalidConfig, "unknown table [" + name + "]");
  for (const auto& [name, arr] : doc.arrays)
    if (name != "shape") throw Error(ErrorCode::InvalidConfig, "unknown table array [[" + name + "]]");
  if (const auto* root = doc.table(""); root && !root->empty())
    throw Error(ErrorCode::InvalidConfig,
                root->begin()->second.where() + ": key '" + root->begin()->first + "' outside any table");

  if (const auto* b = doc.table("bench")) {
    require_known_keys(*b, "bench",
                       {"trials", "sizes", "crs", "matrix_kinds", "solvers", "base_seed", "block_size",
                        "beta_scale", "eta", "transform", "noise_snr", "threads"});
    // wraps parse errors of string-valued fields with the line number
    auto at = [](const ConfigValue& v, auto&& fn) {
      try {
        return fn();
      } catch (const Error& e) {
        if (e.code() != ErrorCode::InvalidConfig || e.detail().starts_with("line ")) throw;
        throw Error(ErrorCode::InvalidConfig, v.where() + ": " + e.detail());
      }
    };
    for (const auto& [key, v] : *b) {
      if (key == "trials") {
        const auto t = v.as_int(key);
        if (t < 1) throw Error(ErrorCode::InvalidConfig, v.where() + ": trials must be >= 1");
        cfg.trials = static_cast<std::size_t>(t);
      } else if (key == "sizes") {
        cfg.sizes.clear();
        for (const auto& e : v.as_array()) cfg.sizes.push_back(static_cast<Index>(e.as_int(key)));
      } else if (key == "crs") {
        cfg.crs.clear();
        for (const auto& e : v.as_array()) {
          const double cr = e.as_double(key);
          if (!(cr >= 0.0 && cr < 1.0)) throw Error(ErrorCode::InvalidConfig, e.where() + ": cr must lie in [0, 1)");
          cfg.crs.push_back(cr);
        }
      } else if (key == "matrix_kinds") {
        cfg.matrix_kinds.clear();
        for (const auto& e : v.as_array())
          cfg.matrix_kinds.push_back(at(e, [&] { return parse_matrix_kind(e.as_string(key)); }));
      } else if (key == "solvers") {
        cfg.solvers.clear();
        for (const auto& e : v.as_array()) cfg.solvers.push_back(at(e, [&] { return parse_solver(e.as_string(key)); }));
      } else if (key == "base_seed") {
        cfg.base_seed = v.as_u64(key);
      } else if (key == "block_size") {
        cfg.block_size = static_cast<Index>(v.as_int(key));
      } else if (key == "beta_scale") {
        cfg.beta_scale = v.as_double(key);
      } else if (key == "eta") {
        cfg.eta = v.as_double(key);
      } else if (key == "transform") {
        cfg.transform = at(v, [&] { return parse_transform(v.as_string(key)); });
      } else if (key == "noise_snr") {
        cfg.noise_snr = v.as_double(key);
      } else if (key == "threads") {
        const auto t = v.as_int(key);
        if (t < 1) throw Error(ErrorCode::InvalidConfig, v.where() + ": threads must be >= 1");
        cfg.threads = static_cast<std::size_t>(t);
      }
    }
  }

  std::string name = "s0";
  double blur = 1.5;
  if (const auto* p = doc.table("phantom")) {
    require_known_keys(*p, "phantom", {"name", "blur_sigma"});
    if (auto it = p->find("name"); it != p->end()) name = it->second.as_string("name");
    if (auto it = p->find("blur_sigma"); it != p->end()) blur = it->second.as_double("blur_sigma");
  }
  auto shapes = doc.arrays.find("shape");
  if (name == "custom") {
    PhantomSpec spec;
    spec.blur_sigma = blur;
    if (shapes == doc.arrays.end())
      throw Error(ErrorCode::InvalidConfig, "phantom 'custom' needs at least one [[shape]] table");
    for (const auto& t : shapes->second) {
      require_known_keys(t, "shape", {"kind", "center", "extent", "amplitude"});
      Shape s;
      for (const auto& [key, v] : t) {
        if (key == "kind") {
          try {
            s.kind = parse_shape_kind(v.as_string(key));
          } catch (const Error& e) {
            throw Error(ErrorCode::InvalidConfig, v.where() + ": " + e.detail());
          }
        } else if (key == "center") {
          const auto c = v.as_array();
          if (c.size() != 2) throw Error(ErrorCode::InvalidConfig, v.where() + ": center must be [row, col]");
          s.center_row = c[0].as_double(key);
          s.center_col = c[1].as_double(key);
        } else if (key == "extent") {
          s.extent = v.as_double(key);
        } else if (key == "amplitude") {
          const auto a = v.as_array();
          if (a.size() != 2) throw Error(ErrorCode::InvalidConfig, v.where() + ": amplitude must be [re, im]");
          s.amplitude = cplx(a[0].as_double(key), a[1].as_double(key));
        }
      }
      spec.shapes.push_back(s);
    }
    try {
      spec.validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::InvalidConfig, "[[shape]]: " + e.detail());
    }
    cfg.custom = std::move(spec);
    cfg.phantom = "custom";
  } else {
    if (shapes != doc.arrays.end())
      throw Error(ErrorCode::InvalidConfig, "[[shape]] tables require phantom name = \"custom\"");
    try {
      builtin_phantom(name, 64);
    } catch (const Error& e) {
      throw Error(ErrorCode::InvalidConfig, "[phantom] name: " + e.detail());
    }
    cfg.phantom = name;
  }
  cfg.validate();
  return cfg;
}

}  // namespace thzcs
