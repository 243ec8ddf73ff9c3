#pragma once

// Command-line front end. run() parses argv, dispatches to one subcommand and
// maps failures to exit codes: 2 for invalid input, 1 for runtime errors.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cte/cte.hpp"

namespace cte::cli {

inline constexpr const char* kVersion = "cte 1.0.0 (spec 1)";

struct ModelOptions {
  std::string model = "gaussian";
  RefractoryModelParams refractory{};
  GaussianModelParams gaussian{};
  // One source rate for either model; the model defaults differ.
  std::optional<double> lambda_y;

  void apply_lambda_y() {
    if (lambda_y) refractory.lambda_y = gaussian.lambda_y = *lambda_y;
  }
};

struct Options {
  ModelOptions m;
  // simulate
  double duration = 100.0;
  std::uint64_t seed = 1;
  std::string scheme = "thinning";
  double dt = 1e-3;
  std::string out;
  std::string in;
  std::string out_dir = ".";
  // windows
  std::string s = "inf";
  std::string r = "inf";
  double grid = 0.01;
  std::string coarse = "auto";
  // rate
  int n_paths = 0;
  int batches = 20;
  // coarse-rate
  MonteCarloConfig mc{};
  std::string history;
  double t = 0.0;
  std::string method = "mc";
  double filter_du = 0.005;
  // converge
  std::string dt_list = "0.02,0.01,0.005";
  // figure1
  std::string a_list;
  std::string lyt_list;
  bool overlay = false;
  double overlay_duration = 2e5;
  int workers = 1;
};

namespace detail {

inline double parse_window(const std::string& v, const char* field) {
  if (v == "inf" || v == "unbounded") return kUnbounded;
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos == v.size() && d > 0) return d;
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::kValidation, std::string(field) + ": must be > 0 or 'inf'", field);
}

inline std::vector<double> parse_list(const std::string& v, const char* field) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(tok, &pos));
      if (pos != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw Error(ErrorKind::kValidation, std::string(field) + ": bad number '" + tok + "'", field);
    }
  }
  return out;
}

inline std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(lo + (hi - lo) * i / (n - 1));
  return v;
}

inline void add_model_options(CLI::App* sub, ModelOptions& m) {
  sub->add_option("--model", m.model, "refractory | gaussian")
      ->check(CLI::IsMember({"refractory", "gaussian"}))
      ->capture_default_str();
  auto& R = m.refractory;
  auto& G = m.gaussian;
  sub->add_option("--a", R.a, "refractory: spike probability in the window")->capture_default_str();
  sub->add_option("--tau", R.tau, "refractory: elevated window length (s)")->capture_default_str();
  sub->add_option("--tau_r", R.tau_r, "refractory: refractory period (s)")->capture_default_str();
  sub->add_option("--lambda_base", G.lambda_base, "gaussian: baseline target rate")
      ->capture_default_str();
  sub->add_option("--m", G.m, "gaussian: peak elevation")->capture_default_str();
  sub->add_option("--sigma", G.sigma, "gaussian: elevation width (s)")->capture_default_str();
  sub->add_option("--t_cut", G.t_cut, "gaussian: dependence horizon (s)")->capture_default_str();
  sub->add_option("--lambda_y", m.lambda_y,
                  "source Poisson rate (refractory default 0.1, gaussian default 1)");
}

inline void validate_model(const ModelOptions& m) {
  if (m.model == "refractory")
    m.refractory.validate();
  else
    m.gaussian.validate();
}

inline void write_csv(const std::filesystem::path& path, const std::string& header,
                      const std::vector<std::vector<double>>& rows) {
  std::ostringstream os;
  os << header << '\n';
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << io::fmt(r[i]);
    os << '\n';
  }
  io::atomic_write(path, os.str());
}

inline std::filesystem::path out_path(const Options& o, const char* name) {
  std::filesystem::create_directories(o.out_dir);
  return std::filesystem::path(o.out_dir) / name;
}

// ----------------------------------------------------------------- commands

inline int cmd_simulate(const Options& o) {
  validate_model(o.m);
  require(!o.out.empty(), "out", "an output path is required");
  SimulationConfig cfg;
  cfg.duration = o.duration;
  cfg.seed = o.seed;
  cfg.scheme = o.scheme == "fixed_step" ? Scheme::kFixedStep : Scheme::kThinning;
  cfg.dt = o.dt;
  JointSpikeRecord rec;
  if (o.m.model == "refractory")
    rec = simulate_coupled(RefractoryTarget{o.m.refractory}, RefractorySource{o.m.refractory}, cfg);
  else
    rec = simulate_coupled(GaussianTarget{o.m.gaussian}, gaussian_source(o.m.gaussian), cfg);
  io::write_record(o.out, rec);
  std::cout << "simulated " << rec.x().size() << " x and " << rec.y().size() << " y events on [0, "
            << io::fmt(o.duration) << ")\n";
  return 0;
}

// Coarse rate model for a record: the closed form for the refractory model,
// the filter or Monte Carlo scheme for the Gaussian model.
inline AnyRate coarse_for(const Options& o, const JointSpikeRecord& rec, HistoryWindows& w) {
  if (o.m.model == "refractory") {
    if (o.coarse != "auto" && o.coarse != "closed-form")
      throw Error(ErrorKind::kValidation, "coarse: refractory model supports closed-form only",
                  "coarse");
    return RefractoryCoarse{o.m.refractory};
  }
  if (o.coarse == "mc") {
    MonteCarloConfig mc = o.mc;
    mc.workers = o.workers;
    w.s = o.m.gaussian.t_cut;
    return coarse_rate_along_train(gaussian_marginal(o.m.gaussian), rec.x(), mc).rate;
  }
  if (o.coarse != "auto" && o.coarse != "filter")
    throw Error(ErrorKind::kValidation, "coarse: must be auto, closed-form, mc or filter", "coarse");
  return filter_coarse_rate_along_train(o.m.gaussian, rec.x(), o.filter_du, o.filter_du);
}

inline AnyRate joint_for(const Options& o) {
  if (o.m.model == "refractory") return RefractoryTarget{o.m.refractory};
  return GaussianTarget{o.m.gaussian};
}

inline int cmd_pathwise(const Options& o) {
  validate_model(o.m);
  require(!o.in.empty(), "in", "an input record is required");
  const auto rec = io::read_record(o.in);
  HistoryWindows w(parse_window(o.s, "s"), parse_window(o.r, "r"));
  const AnyRate coarse = coarse_for(o, rec, w);
  PathOptions opt;
  opt.grid_step = o.grid;
  const auto res = pathwise_te(joint_for(o), coarse, rec, {rec.start_time(), rec.end_time()}, w, opt);
  std::vector<double> grid;
  for (const auto& s : res.nonspiking_samples) grid.push_back(s.t);
  const auto curve = cumulative_te_curve(res, grid);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < grid.size(); ++i)
    rows.push_back({grid[i], curve[i].value, res.nonspiking_samples[i].value});
  write_csv(out_path(o, "te_curve.csv"), "t,cumulative,nonspiking_rate", rows);
  rows.clear();
  for (const auto& j : res.jump_contributions) rows.push_back({j.t, j.delta});
  write_csv(out_path(o, "te_jumps.csv"), "t_i,delta", rows);
  std::cout << "pathwise TE = " << io::fmt(res.total) << " nats (jumps " << io::fmt(res.jump_sum())
            << ", non-spiking " << io::fmt(res.nonspiking_integral) << ")\n";
  return 0;
}

inline int cmd_rate(const Options& o) {
  validate_model(o.m);
  HistoryWindows w(parse_window(o.s, "s"), parse_window(o.r, "r"));
  RateEstimate est;
  if (!o.in.empty()) {
    const auto rec = io::read_record(o.in);
    const AnyRate coarse = coarse_for(o, rec, w);
    est = empirical_te_rate(rec, joint_for(o), coarse, w, o.batches);
  } else {
    require(o.n_paths >= 2, "n_paths", "give --in or --n-paths >= 2");
    SimulationConfig cfg;
    cfg.duration = o.duration;
    cfg.seed = o.seed;
    auto provider = [&](const JointSpikeRecord& rec) {
      HistoryWindows wl = w;
      return coarse_for(o, rec, wl);
    };
    if (o.m.model == "refractory")
      est = ensemble_te_rate(RefractoryTarget{o.m.refractory}, RefractorySource{o.m.refractory},
                             o.n_paths, cfg, w, provider, o.workers);
    else
      est = ensemble_te_rate(GaussianTarget{o.m.gaussian}, gaussian_source(o.m.gaussian),
                             o.n_paths, cfg, w, provider, o.workers);
  }
  if (!o.out.empty())
    write_csv(o.out, "value,stderr,n_events,duration",
              {{est.value, est.stderr_, static_cast<double>(est.n_events), est.duration}});
  std::cout << "TE rate = " << io::fmt(est.value) << " +- " << io::fmt(est.stderr_)
            << " nats/s (" << est.n_events << " target events)";
  if (!est.warning.empty()) std::cout << " warning: " << est.warning;
  std::cout << '\n';
  return 0;
}

inline int cmd_coarse_rate(const Options& o) {
  if (o.m.model != "gaussian")
    throw Error(ErrorKind::kValidation, "model: coarse-rate supports the gaussian model", "model");
  o.m.gaussian.validate();
  MonteCarloConfig mc = o.mc;
  mc.workers = o.workers;
  mc.validate();
  std::vector<std::vector<double>> rows;
  if (!o.in.empty()) {
    const auto rec = io::read_record(o.in);
    if (o.method == "filter") {
      const auto tab = filter_coarse_rate_along_train(o.m.gaussian, rec.x(), o.filter_du, mc.dt_int);
      for (const auto& k : tab.knots()) rows.push_back({k.t, k.left, 0.0});
    } else {
      const auto track = coarse_rate_along_train(gaussian_marginal(o.m.gaussian), rec.x(), mc);
      for (const auto& s : track.samples) rows.push_back({s.t, s.rate, s.stderr_});
    }
  } else {
    const auto hist = o.history.empty() ? std::vector<double>{} : parse_list(o.history, "history");
    for (double h : hist) require(h < o.t, "history", "events must precede t");
    if (o.method == "filter") {
      // Same conditioning as the Monte Carlo scheme: the last t_cut of target
      // history and a stationary source.
      rows.push_back({o.t,
                      filter_oracle_rate(o.m.gaussian, hist, -kUnbounded, o.t, o.filter_du,
                                         o.m.gaussian.t_cut),
                      0.0});
    } else {
      const auto e = mc_coarse_rate(gaussian_marginal(o.m.gaussian), hist, o.t, mc);
      rows.push_back({o.t, e.value, e.stderr_});
      if (e.truncated) std::cerr << "warning: k_max reached, tail " << io::fmt(e.tail_bound) << '\n';
    }
  }
  if (!o.out.empty()) write_csv(o.out, "t,lambda_x,stderr", rows);
  if (rows.size() == 1)
    std::cout << "lambda_x(" << io::fmt(rows[0][0]) << ") = " << io::fmt(rows[0][1]) << " +- "
              << io::fmt(rows[0][2]) << '\n';
  else
    std::cout << "coarse rate at " << rows.size() << " times\n";
  return 0;
}

inline int cmd_converge(const Options& o) {
  require(!o.in.empty(), "in", "an input record is required");
  const auto rec = io::read_record(o.in);
  const auto dts = parse_list(o.dt_list, "dt_list");
  const double s = parse_window(o.s, "s"), r = parse_window(o.r, "r");
  auto bins = [](double depth) {
    return [depth](double dt) { return std::isfinite(depth) ? history_bins(depth, dt) : -1; };
  };
  if (!std::isfinite(s) || !std::isfinite(r))
    throw Error(ErrorKind::kValidation, "s: discrete estimator needs finite --s and --r", "s");
  const auto rows = discrete_rate_convergence(rec, dts, bins(s), bins(r), o.workers);
  std::vector<std::vector<double>> out;
  for (const auto& row : rows)
    out.push_back({row.dt, static_cast<double>(row.k), static_cast<double>(row.l), row.te_per_bin,
                   row.te_per_time});
  if (!o.out.empty()) write_csv(o.out, "dt,k,l,te_per_bin,te_per_time", out);
  for (const auto& row : rows)
    std::cout << "dt=" << io::fmt(row.dt) << " k=" << row.k << " l=" << row.l
              << " te/bin=" << io::fmt(row.te_per_bin) << " te/dt=" << io::fmt(row.te_per_time)
              << '\n';
  return 0;
}

inline int cmd_figure1(const Options& o) {
  const auto as = o.a_list.empty() ? linspace(0.05, 0.95, 10) : parse_list(o.a_list, "a_list");
  const auto lyts =
      o.lyt_list.empty() ? std::vector<double>{0.005, 0.01, 0.02, 0.03, 0.05, 0.07, 0.1, 0.15, 0.2, 0.3}
                         : parse_list(o.lyt_list, "lyt_list");
  std::vector<std::vector<double>> rows;
  for (const auto& r : figure1_data(as, lyts))
    rows.push_back({r.a, r.lambda_y_tau, r.normalized, r.saturated ? 1.0 : 0.0, NAN, NAN});
  if (o.overlay) {
    for (double a : {0.25, 0.5, 0.75}) {
      RefractoryModelParams p{0.05, a, 1.0, 1.0};
      const auto ov = figure1_overlay_point(p, o.overlay_duration, o.seed);
      rows.push_back({a, p.lambda_y * p.tau, ov.closed_form, 0.0, ov.estimate, ov.stderr_});
    }
  }
  write_csv(out_path(o, "fig1.csv"), "a,lambda_y_tau,normalized,saturated,estimate,stderr", rows);
  std::cout << "wrote " << rows.size() << " rows to fig1.csv\n";
  return 0;
}

inline int cmd_figure2(const Options& o) {
  o.m.gaussian.validate();
  Figure2Config cfg;
  cfg.grid_step = o.grid;
  cfg.method = o.method == "filter" ? CoarseMethod::kFilter : CoarseMethod::kMonteCarlo;
  cfg.mc = o.mc;
  cfg.mc.workers = o.workers;
  cfg.filter_du = o.filter_du;
  const auto d = figure2_data(o.seed, o.duration, o.m.gaussian, cfg);

  std::ostringstream raster;
  raster << "time,channel,delta_te\n";
  std::size_t j = 0;
  for (const auto& e : merge_event_streams(d.record)) {
    raster << io::fmt_time(e.time) << ',' << channel_char(e.channel) << ',';
    if (e.channel == Channel::kX) raster << io::fmt(d.te.jump_contributions[j++].delta);
    raster << '\n';
  }
  io::atomic_write(out_path(o, "fig2_raster.csv"), raster.str());
  std::vector<std::vector<double>> rates, te;
  for (const auto& s : d.samples) {
    rates.push_back({s.t, s.lambda_joint, s.lambda_coarse, s.nonspiking_rate, s.log_ratio});
    te.push_back({s.t, s.cumulative});
  }
  te.push_back({d.duration, d.te.total});
  write_csv(out_path(o, "fig2_rates.csv"), "t,lambda_x_given_y,lambda_x,nonspiking_rate,log_ratio",
            rates);
  write_csv(out_path(o, "fig2_te.csv"), "t,cumulative", te);
  nlohmann::json meta = {
      {"seed", d.seed},
      {"duration", d.duration},
      {"lambda_base", d.params.lambda_base},
      {"m", d.params.m},
      {"sigma", d.params.sigma},
      {"t_cut", d.params.t_cut},
      {"lambda_y", d.params.lambda_y},
      {"coarse_method", to_string(d.method)},
      {"s", std::isfinite(d.windows.s) ? nlohmann::json(d.windows.s) : nlohmann::json("inf")},
      {"r", std::isfinite(d.windows.r) ? nlohmann::json(d.windows.r) : nlohmann::json("inf")},
      {"prior", "no spikes before t=0"},
      {"total_te", d.te.total},
  };
  io::atomic_write(out_path(o, "fig2_meta.json"), meta.dump(2) + "\n");
  std::cout << "figure 2: " << d.record.x().size() << " x, " << d.record.y().size()
            << " y events; pathwise TE = " << io::fmt(d.te.total) << " nats\n";
  return 0;
}

// Effective configuration of the root options and the selected subcommand,
// in a form `--config` reads back.
inline std::string dump_config(const CLI::App& app) {
  std::string active;
  for (const auto* sub : app.get_subcommands()) active = sub->get_name();
  std::istringstream in(app.config_to_str(true, false));
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.starts_with("dump-config=")) continue;
    const auto eq = line.find('=');
    const auto dot = line.find('.');
    const bool root = dot == std::string::npos || dot > eq;
    if (root || line.compare(0, active.size() + 1, active + ".") == 0) out << line << '\n';
  }
  return out.str();
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& err = std::cerr) {
  Options o;
  CLI::App app{"Continuous-time transfer entropy for point and jump processes"};
  app.set_version_flag("--version", kVersion);
  app.set_config("--config", "", "read options from an INI file");
  app.config_formatter(std::make_shared<CLI::ConfigINI>());
  bool dump = false;
  app.add_flag("--dump-config", dump, "print the effective configuration and exit");
  app.add_option("--workers", o.workers, "worker threads (results do not depend on it)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.require_subcommand(1);

  auto* sim = app.add_subcommand("simulate", "simulate a joint spike record");
  detail::add_model_options(sim, o.m);
  sim->add_option("--duration", o.duration)->capture_default_str();
  sim->add_option("--seed", o.seed)->capture_default_str();
  sim->add_option("--scheme", o.scheme)
      ->check(CLI::IsMember({"thinning", "fixed_step"}))
      ->capture_default_str();
  sim->add_option("--dt", o.dt, "fixed_step only")->capture_default_str();
  sim->add_option("--out", o.out, "record CSV")->required();

  auto add_windows = [&](CLI::App* sub) {
    sub->add_option("--s", o.s, "target history depth (s) or inf")->capture_default_str();
    sub->add_option("--r", o.r, "source history depth (s) or inf")->capture_default_str();
  };
  auto add_coarse = [&](CLI::App* sub) {
    sub->add_option("--coarse", o.coarse, "auto | closed-form | mc | filter")
        ->check(CLI::IsMember({"auto", "closed-form", "mc", "filter"}))
        ->capture_default_str();
    sub->add_option("--filter-du", o.filter_du, "filter lattice step")->capture_default_str();
  };
  auto add_mc = [&](CLI::App* sub) {
    sub->add_option("--k-max", o.mc.k_max)->capture_default_str();
    sub->add_option("--tol-k", o.mc.tol_k)->capture_default_str();
    sub->add_option("--n-samples", o.mc.n_samples)->capture_default_str();
    sub->add_option("--dt-int", o.mc.dt_int)->capture_default_str();
    sub->add_option("--dtau-interp", o.mc.dtau_interp)->capture_default_str();
    sub->add_option("--n-x", o.mc.n_x_precompute)->capture_default_str();
    sub->add_option("--mc-seed", o.mc.seed)->capture_default_str();
  };

  auto* pw = app.add_subcommand("pathwise", "pathwise TE along a record");
  detail::add_model_options(pw, o.m);
  pw->add_option("--in", o.in, "record CSV")->required();
  add_windows(pw);
  add_coarse(pw);
  add_mc(pw);
  pw->add_option("--grid", o.grid, "output grid step")->capture_default_str();
  pw->add_option("--out-dir", o.out_dir)->capture_default_str();

  auto* rate = app.add_subcommand("rate", "TE rate, from a record or an ensemble");
  detail::add_model_options(rate, o.m);
  rate->add_option("--in", o.in, "record CSV (otherwise simulate an ensemble)");
  rate->add_option("--n-paths", o.n_paths)->capture_default_str();
  rate->add_option("--duration", o.duration)->capture_default_str();
  rate->add_option("--seed", o.seed)->capture_default_str();
  rate->add_option("--batches", o.batches)->capture_default_str();
  rate->add_option("--out", o.out, "CSV with value,stderr,n_events,duration");
  add_windows(rate);
  add_coarse(rate);
  add_mc(rate);

  auto* cr = app.add_subcommand("coarse-rate", "coarse-grained target rate");
  detail::add_model_options(cr, o.m);
  cr->add_option("--in", o.in, "record CSV (rate along its target train)");
  cr->add_option("--history", o.history, "comma-separated target events before --t");
  cr->add_option("--t", o.t)->capture_default_str();
  cr->add_option("--method", o.method)->check(CLI::IsMember({"mc", "filter"}))->capture_default_str();
  cr->add_option("--filter-du", o.filter_du)->capture_default_str();
  cr->add_option("--out", o.out, "CSV with t,lambda_x,stderr");
  add_mc(cr);

  auto* cv = app.add_subcommand("converge", "discrete-time TE against bin width");
  cv->add_option("--in", o.in, "record CSV")->required();
  cv->add_option("--dt-list", o.dt_list, "decreasing bin widths")->capture_default_str();
  cv->add_option("--s", o.s, "target history depth")->required();
  cv->add_option("--r", o.r, "source history depth")->required();
  cv->add_option("--out", o.out, "CSV with dt,k,l,te_per_bin,te_per_time");

  auto* f1 = app.add_subcommand("figure1", "normalised TE rate of the refractory model");
  f1->add_option("--a-list", o.a_list);
  f1->add_option("--lyt-list", o.lyt_list, "lambda_y * tau values");
  f1->add_flag("--overlay", o.overlay, "add simulation estimates at a = 0.25, 0.5, 0.75");
  f1->add_option("--overlay-duration", o.overlay_duration)->capture_default_str();
  f1->add_option("--seed", o.seed)->capture_default_str();
  f1->add_option("--out-dir", o.out_dir)->capture_default_str();

  auto* f2 = app.add_subcommand("figure2", "annotated realisation of the Gaussian model");
  detail::add_model_options(f2, o.m);
  f2->add_option("--seed", o.seed)->capture_default_str();
  f2->add_option("--duration", o.duration)->capture_default_str();
  f2->add_option("--grid", o.grid)->capture_default_str();
  f2->add_option("--method", o.method)->check(CLI::IsMember({"mc", "filter"}))->capture_default_str();
  f2->add_option("--filter-du", o.filter_du)->capture_default_str();
  f2->add_option("--out-dir", o.out_dir)->capture_default_str();
  add_mc(f2);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e, std::cout, err);
    return 2;
  }
  o.m.apply_lambda_y();
  if (dump) {
    std::cout << detail::dump_config(app);
    return 0;
  }
  try {
    if (*sim) return detail::cmd_simulate(o);
    if (*pw) return detail::cmd_pathwise(o);
    if (*rate) return detail::cmd_rate(o);
    if (*cr) return detail::cmd_coarse_rate(o);
    if (*cv) return detail::cmd_converge(o);
    if (*f1) return detail::cmd_figure1(o);
    if (*f2) return detail::cmd_figure2(o);
  } catch (const Error& e) {
    const bool input = e.kind() == ErrorKind::kValidation || e.kind() == ErrorKind::kBipartite ||
                       e.kind() == ErrorKind::kOrdering;
    err << "error";
    if (!e.field().empty()) err << " [" << e.field() << "]";
    err << ": " << e.what() << '\n';
    return input ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace cte::cli
