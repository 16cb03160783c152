// thzcs command-line front end.
//
// Exit codes: 0 ok, 1 I/O or file format, 2 usage/invalid arguments,
// 3 numerical failure inside a solver.

#include "thzcs/acquisition.hpp"
#include "thzcs/bench.hpp"
#include "thzcs/bsbl.hpp"
#include "thzcs/config.hpp"
#include "thzcs/io.hpp"
#include "thzcs/ista.hpp"
#include "thzcs/metrics.hpp"
#include "thzcs/phantom.hpp"
#include "thzcs/report.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace thzcs;

constexpr int kExitIo = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io:
    case ErrorCode::Format: return kExitIo;
    case ErrorCode::NumericalFailure:
    case ErrorCode::SingularS: return kExitNumerical;
    default: return kExitUsage;
  }
}

struct Globals {
  std::uint64_t seed = 0;
  std::string format = "cim";
  std::string out;
};

FileFormat out_format(const Globals& g) { return parse_format(g.format); }

void require_out(const Globals& g, const char* what) {
  if (g.out.empty()) throw Error(ErrorCode::InvalidConfig, std::string("--out is required for ") + what);
}

// ---- phantom ---------------------------------------------------------------

struct PhantomArgs {
  std::string name = "s0";
  std::string config;
  Index size = 64;
  std::optional<double> blur;
};

void cmd_phantom(const Globals& g, const PhantomArgs& a) {
  require_out(g, "phantom");
  const auto fmt = out_format(g);
  PhantomSpec spec;
  if (!a.config.empty()) {
    const BenchConfig cfg = bench_config_from(load_config(a.config));
    spec = cfg.phantom_spec(a.size);
  } else {
    spec = builtin_phantom(a.name, a.size);
  }
  if (a.blur) spec.blur_sigma = *a.blur;
  write_image(g.out, gen_phantom(spec, g.seed), fmt);
}

// ---- sense -----------------------------------------------------------------

struct SenseArgs {
  std::string image;
  std::string matrix = "gaussian";
  int k = 5;
  double cr = 0.5;
  std::optional<double> noise_snr;
  std::string phi_out;
};

void cmd_sense(const Globals& g, const SenseArgs& a) {
  require_out(g, "sense");
  if (a.phi_out.empty()) throw Error(ErrorCode::InvalidConfig, "--phi-out is required for sense");
  if (!(a.cr >= 0.0 && a.cr < 1.0)) throw Error(ErrorCode::InvalidConfig, "--cr must lie in [0, 1)");
  const auto fmt = out_format(g);
  const ComplexImage x = read_image(a.image);
  const Index n = x.rows();
  const Index m = m_for_cr(n, a.cr);
  SensingMatrix phi = a.matrix == "gaussian"    ? gen_gaussian_complex(m, n, g.seed)
                      : a.matrix == "bernoulli" ? gen_bernoulli_k(m, n, a.k, g.seed)
                                                : throw Error(ErrorCode::InvalidConfig,
                                                              "--matrix must be gaussian or bernoulli");
  MeasurementMatrix y = acquire_scan(phi, x);
  if (a.noise_snr) y = add_awgn(y, *a.noise_snr, mix_seed(g.seed, 2));
  write_measurements(g.out, y, fmt);
  write_sensing(a.phi_out, phi, fmt);
  std::printf("m=%lld n=%lld cols=%lld cr=%s achieved_cr=%s seed=%llu\n", static_cast<long long>(m),
              static_cast<long long>(n), static_cast<long long>(x.cols()), bench_detail::fmt(a.cr).c_str(),
              bench_detail::fmt(compression_ratio_scan(n, m).value()).c_str(), static_cast<unsigned long long>(g.seed));
}

// ---- recover ---------------------------------------------------------------

struct RecoverArgs {
  std::string y;
  std::string phi;
  std::string solver = "bsbl";
  Index block = 4;
  double eta = 1e-4;
  std::string transform = "none";
  std::string truth;
  double beta_scale = 0.01;
  std::string beta_ref = "per_entry";
  std::optional<std::size_t> max_iter;
  bool add_only = false;
  std::optional<double> lambda;
  std::string report;
};

int cmd_recover(const Globals& g, const RecoverArgs& a) {
  require_out(g, "recover");
  const auto fmt = out_format(g);
  const auto solver = parse_solver(a.solver);
  const auto transform = parse_transform(a.transform);
  const MeasurementMatrix y = read_measurements(a.y);
  const SensingMatrix phi = read_sensing(a.phi);
  if (y.m() != phi.m())
    throw Error(ErrorCode::DimensionMismatch, "Y has " + std::to_string(y.m()) + " rows but Phi has " +
                                                  std::to_string(phi.m()));
  std::optional<ComplexImage> truth;
  if (!a.truth.empty()) {
    truth = read_image(a.truth);
    if (truth->rows() != phi.n() || truth->cols() != y.cols())
      throw Error(ErrorCode::DimensionMismatch, "truth image is " + std::to_string(truth->rows()) + "x" +
                                                    std::to_string(truth->cols()) + ", expected " +
                                                    std::to_string(phi.n()) + "x" + std::to_string(y.cols()));
  }

  SolveOptions opts;
  opts.block_size = a.block;
  opts.eta = a.eta;
  opts.beta_scale = a.beta_scale;
  opts.beta_reference = parse_beta_reference(a.beta_ref);
  opts.transform = transform;
  opts.max_iter = a.max_iter;
  opts.add_only = a.add_only;
  opts.validate();
  if (a.block > phi.n()) throw Error(ErrorCode::InvalidBlockSize, "--block exceeds the signal length");

  SolveReport report;
  if (solver == SolverId::Bsbl) {
    report = solve_bmmv(y, phi, opts);
  } else {
    IstaOptions io;
    io.lambda = a.lambda;
    io.transform = transform;
    report = solve_ista_columnwise(y, phi, io);
  }
  write_image(g.out, report.estimate, fmt);

  ReportContext ctx;
  ctx.solver = to_string(solver);
  ctx.eta = a.eta;
  ctx.block_size = a.block;
  ctx.seed = g.seed;
  if (truth) ctx.snr = snr_db(*truth, report.estimate);
  const auto json = report_to_json(report, ctx).dump(2);
  if (!a.report.empty()) {
    std::ofstream f(a.report);
    if (!f) throw Error(ErrorCode::Io, "cannot write report '" + a.report + "'");
    f << json << '\n';
  } else {
    std::cout << json << '\n';
  }
  return 0;
}

// ---- bench -----------------------------------------------------------------

struct BenchArgs {
  std::string config;
  std::size_t trials = 50;
  std::vector<Index> sizes{64};
  std::vector<double> crs{0.5, 0.7, 0.9};
  std::vector<std::string> matrices{"gaussian"};
  std::vector<std::string> solvers{"bsbl"};
  Index block = 4;
  std::string phantom = "s0";
  double beta_scale = 0.01;
  double eta = 1e-4;
  std::string transform = "none";
  std::optional<double> noise_snr;
  std::size_t threads = 1;
  std::string summary;
};

void cmd_bench(const Globals& g, const BenchArgs& a, const CLI::App& sub, bool seed_given) {
  BenchConfig cfg = a.config.empty() ? BenchConfig{} : bench_config_from(load_config(a.config));
  // inline flags override the file; without a file they fill the defaults
  auto given = [&](const char* name) { return a.config.empty() || sub.count(name) > 0; };
  if (given("--trials")) cfg.trials = a.trials;
  if (given("--size")) cfg.sizes = a.sizes;
  if (given("--cr")) cfg.crs = a.crs;
  if (given("--matrix")) {
    cfg.matrix_kinds.clear();
    for (const auto& m : a.matrices) cfg.matrix_kinds.push_back(parse_matrix_kind(m));
  }
  if (given("--solver")) {
    cfg.solvers.clear();
    for (const auto& s : a.solvers) cfg.solvers.push_back(parse_solver(s));
  }
  if (given("--block")) cfg.block_size = a.block;
  if (given("--phantom")) {
    cfg.phantom = a.phantom;
    cfg.custom.reset();
  }
  if (given("--beta-scale")) cfg.beta_scale = a.beta_scale;
  if (given("--eta")) cfg.eta = a.eta;
  if (given("--transform")) cfg.transform = parse_transform(a.transform);
  if (sub.count("--noise-snr")) cfg.noise_snr = a.noise_snr;
  if (given("--threads")) cfg.threads = a.threads;
  if (a.config.empty() || seed_given) cfg.base_seed = g.seed;
  cfg.validate();

  const auto records = run_benchmark(cfg);
  if (!g.out.empty()) {
    std::ofstream f(g.out);
    if (!f) throw Error(ErrorCode::Io, "cannot write records '" + g.out + "'");
    write_records_csv(f, records);
  } else {
    write_records_csv(std::cout, records);
    std::cout << '\n';
  }
  const auto rows = summarize(records);
  if (!a.summary.empty()) {
    std::ofstream f(a.summary);
    if (!f) throw Error(ErrorCode::Io, "cannot write summary '" + a.summary + "'");
    write_summary_csv(f, rows);
  }
  write_summary_table(std::cout, rows);
}

// ---- convert ---------------------------------------------------------------

struct ConvertArgs {
  std::string in;
  bool sensing = false;
};

void cmd_convert(const Globals& g, const ConvertArgs& a) {
  require_out(g, "convert");
  const auto fmt = out_format(g);
  std::string bytes;
  {
    std::ifstream f(a.in, std::ios::binary);
    if (!f) throw Error(ErrorCode::Io, "cannot open '" + a.in + "' for reading");
    bytes.assign(std::istreambuf_iterator<char>(f), {});
  }
  if (a.sensing || is_cim_sensing(bytes)) {
    const SensingMatrix phi = decode_sensing(bytes);
    write_sensing(g.out, phi, fmt);
  } else {
    const ComplexImage img(decode_matrix(bytes));
    write_image(g.out, img, fmt);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scan-based compressive THz imaging: phantoms, sensing, block-sparse recovery, benchmarks"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Random seed (sense: matrix and noise; bench: base seed)");
  app.add_option("--format", g.format, "Output format for data files")->check(CLI::IsMember({"cim", "csv"}));
  app.add_option("--out", g.out, "Primary output path");

  PhantomArgs pa;
  auto* ph = app.add_subcommand("phantom", "Write a synthetic phantom image");
  ph->fallthrough();
  ph->add_option("--name", pa.name, "Built-in phantom (s0|s1|s2)");
  ph->add_option("--config", pa.config, "Config file with [phantom] / [[shape]] tables");
  ph->add_option("--size", pa.size, "Image side length")->check(CLI::PositiveNumber);
  ph->add_option("--blur", pa.blur, "Override the Gaussian blur sigma (pixels)");

  SenseArgs sa;
  auto* se = app.add_subcommand("sense", "Acquire an image with a generated sensing matrix");
  se->fallthrough();
  se->add_option("--image", sa.image, "Input image")->required();
  se->add_option("--matrix", sa.matrix, "gaussian|bernoulli")->check(CLI::IsMember({"gaussian", "bernoulli"}));
  se->add_option("--k", sa.k, "Ones per column for bernoulli");
  se->add_option("--cr", sa.cr, "Compression ratio (N-M)/N in [0,1)");
  se->add_option("--noise-snr", sa.noise_snr, "Add complex AWGN at this SNR (dB)");
  se->add_option("--phi-out", sa.phi_out, "Sensing matrix output path");

  RecoverArgs ra;
  auto* re = app.add_subcommand("recover", "Reconstruct an image from measurements");
  re->fallthrough();
  re->add_option("--y", ra.y, "Measurement matrix file")->required();
  re->add_option("--phi", ra.phi, "Sensing matrix file")->required();
  re->add_option("--solver", ra.solver, "bsbl|ista")->check(CLI::IsMember({"bsbl", "ista"}));
  re->add_option("--block", ra.block, "Block size");
  re->add_option("--eta", ra.eta, "Relative cost-change stopping threshold");
  re->add_option("--transform", ra.transform, "none|dft")->check(CLI::IsMember({"none", "dft"}));
  re->add_option("--truth", ra.truth, "Ground-truth image; adds snr_db to the report");
  re->add_option("--beta-scale", ra.beta_scale, "Noise variance relative to measurement power");
  re->add_option("--beta-ref", ra.beta_ref, "per_entry|total")->check(CLI::IsMember({"per_entry", "total"}));
  re->add_option("--max-iter", ra.max_iter, "Iteration cap (default 5 x blocks)");
  re->add_flag("--add-only", ra.add_only, "Only add blocks; never re-estimate or delete");
  re->add_option("--lambda", ra.lambda, "ISTA shrinkage weight (default adaptive)");
  re->add_option("--report", ra.report, "JSON report path (default stdout)");

  BenchArgs ba;
  auto* be = app.add_subcommand("bench", "Run the multi-trial benchmark");
  be->fallthrough();
  be->add_option("--config", ba.config, "Benchmark config file");
  be->add_option("--trials", ba.trials, "Trials per cell");
  be->add_option("--size", ba.sizes, "Image sizes")->delimiter(',');
  be->add_option("--cr", ba.crs, "Compression ratios")->delimiter(',');
  be->add_option("--matrix", ba.matrices, "gaussian|bernoulli<k>")->delimiter(',');
  be->add_option("--solver", ba.solvers, "bsbl|ista")->delimiter(',');
  be->add_option("--block", ba.block, "Block size");
  be->add_option("--phantom", ba.phantom, "Built-in phantom");
  be->add_option("--beta-scale", ba.beta_scale, "BSBL noise variance scale");
  be->add_option("--eta", ba.eta, "BSBL stopping threshold");
  be->add_option("--transform", ba.transform, "none|dft");
  be->add_option("--noise-snr", ba.noise_snr, "Measurement SNR (dB)");
  be->add_option("--threads", ba.threads, "Parallel cells");
  be->add_option("--summary", ba.summary, "Summary CSV path");

  ConvertArgs ca;
  auto* co = app.add_subcommand("convert", "Convert between CIM1 and CSV");
  co->fallthrough();
  co->add_option("--in", ca.in, "Input file")->required();
  co->add_flag("--sensing", ca.sensing, "Treat the input as a sensing matrix (CSV kind is inferred)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (ph->parsed()) cmd_phantom(g, pa);
    else if (se->parsed()) cmd_sense(g, sa);
    else if (re->parsed()) return cmd_recover(g, ra);
    else if (be->parsed()) cmd_bench(g, ba, *be, app.count("--seed") > 0);
    else if (co->parsed()) cmd_convert(g, ca);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  }
  return 0;
}
