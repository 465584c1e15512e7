#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include "volfilter/data_io.hpp"
#include "volfilter/estimator.hpp"
#include "volfilter/models.hpp"
#include "volfilter/sim.hpp"
#include "volfilter/stats.hpp"

namespace volfilter::cli {

namespace {

// Flag combinations that CLI11 cannot express declaratively.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Phase { Input, Compute };

// ---------------------------------------------------------------------------
// Model selection: flags > config file > preset
// ---------------------------------------------------------------------------

struct ModelOptions {
  std::string model;
  std::string preset_name;
  std::string config;
  double k = 0.0;
  double alpha = 0.0;
  double m = 0.0;
  CLI::Option* model_opt = nullptr;
  CLI::Option* preset_opt = nullptr;
  CLI::Option* config_opt = nullptr;
  CLI::Option* k_opt = nullptr;
  CLI::Option* alpha_opt = nullptr;
  CLI::Option* m_opt = nullptr;

  void attach(CLI::App* app) {
    model_opt = app->add_option("--model", model, "expou | ou | heston")
                    ->check(CLI::IsMember({"expou", "ou", "heston"}, CLI::ignore_case));
    preset_opt = app->add_option("--preset", preset_name, "dji-expou | dji-ou | dji-heston")
                     ->check(CLI::IsMember({"dji-expou", "dji-ou", "dji-heston"}, CLI::ignore_case));
    config_opt = app->add_option("--config", config, "key = value model file");
    k_opt = app->add_option("--k", k, "volatility of volatility");
    alpha_opt = app->add_option("--alpha", alpha, "reversion rate, 1/day");
    m_opt = app->add_option("--m", m, "normal level");
  }

  bool given() const {
    return *model_opt || *preset_opt || *config_opt || *k_opt || *alpha_opt || *m_opt;
  }

  // Kind comes from the highest-precedence source naming one. Parameters
  // start from the DJI calibration of that kind (or the named preset),
  // then the config file, then individual flags.
  std::optional<ModelSpec> resolve() const {
    if (!given()) return std::nullopt;
    std::optional<ModelKind> kind;
    std::optional<ModelSpec> from_preset;
    KeyValues kv;
    if (*preset_opt) {
      from_preset = preset(preset_name);
      kind = from_preset->kind;
    }
    if (*config_opt) {
      kv = read_key_values(config);
      if (const auto it = kv.find("model"); it != kv.end()) kind = parse_model_kind(it->second);
    }
    if (*model_opt) kind = parse_model_kind(model);
    if (!kind) throw UsageError("no model given: use --model, --preset or --config");

    ModelSpec spec;
    if (from_preset && from_preset->kind == *kind) {
      spec = *from_preset;
    } else {
      spec = *preset(std::string("dji-") + std::string(to_string(*kind)));
    }
    const auto from_config = [&kv](const char* key, double& target) {
      if (const auto it = kv.find(key); it != kv.end()) target = parse_number(it->second);
    };
    from_config("k", spec.params.k);
    from_config("alpha", spec.params.alpha);
    from_config("m", spec.params.m);
    if (*k_opt) spec.params.k = k;
    if (*alpha_opt) spec.params.alpha = alpha;
    if (*m_opt) spec.params.m = m;
    spec.validate();
    return spec;
  }

  ModelSpec require() const {
    auto spec = resolve();
    if (!spec) throw UsageError("a model is required: use --model, --preset or --config");
    return *spec;
  }
};

// ---------------------------------------------------------------------------
// Return inputs
// ---------------------------------------------------------------------------

struct InputOptions {
  std::string prices;
  std::string returns;
  std::string path;
  CLI::Option* prices_opt = nullptr;
  CLI::Option* returns_opt = nullptr;
  CLI::Option* path_opt = nullptr;

  void attach(CLI::App* app) {
    prices_opt = app->add_option("--prices", prices, "CSV with date and close columns");
    returns_opt = app->add_option("--returns", returns, "returns series file");
    path_opt = app->add_option("--path", path, "simulated path file");
    prices_opt->excludes(returns_opt)->excludes(path_opt);
    returns_opt->excludes(path_opt);
  }

  bool given() const { return *prices_opt || *returns_opt || *path_opt; }
};

struct LoadedInput {
  ReturnSeries returns;
  std::optional<VolSeries> truth;  ///< simulated volatility aligned to returns
};

LoadedInput load_input(const InputOptions& in) {
  LoadedInput loaded;
  if (*in.prices_opt) {
    auto prices = load_prices(in.prices);
    prices.label = in.prices;
    loaded.returns = to_returns(prices);
  } else if (*in.returns_opt) {
    loaded.returns = load_returns(in.returns);
  } else if (*in.path_opt) {
    const auto path = load_path(in.path);
    loaded.returns.dx = path.increments();
    loaded.returns.label = "path:" + in.path;
    VolSeries truth;
    truth.sigma.assign(path.sigma.begin(), path.sigma.end() - (path.size() > 0 ? 1 : 0));
    truth.estimator = "true";
    truth.spec = path.config.spec;
    loaded.truth = std::move(truth);
  } else {
    throw UsageError("an input is required: use --prices, --returns or --path");
  }
  return loaded;
}

void emit(const AnalysisTable& table, const std::string& target, std::ostream& out) {
  if (target == "-") {
    table.write(out);
  } else {
    table.save(target);
  }
}

std::vector<std::size_t> parse_horizons(const std::string& text) {
  std::vector<std::size_t> out;
  const auto to_size = [&text](std::string_view s) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || v == 0) {
      throw ValidationError("bad horizon list '" + text + "'");
    }
    return v;
  };
  if (const auto dots = text.find(".."); dots != std::string::npos) {
    const auto lo = to_size(std::string_view(text).substr(0, dots));
    const auto hi = to_size(std::string_view(text).substr(dots + 2));
    if (hi < lo) throw ValidationError("bad horizon range '" + text + "'");
    for (std::size_t h = lo; h <= hi; ++h) out.push_back(h);
    return out;
  }
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = std::min(text.find(',', start), text.size());
    out.push_back(to_size(std::string_view(text).substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

struct Context {
  std::ostream& out;
  std::ostream& err;
  Phase phase = Phase::Input;
};

struct SimulateCmd {
  ModelOptions model;
  std::size_t steps = 0;
  double dt = 1.0;
  double y0 = 0.0;
  CLI::Option* y0_opt = nullptr;
  unsigned long long seed = default_seed();
  std::string out = "-";

  void attach(CLI::App* app) {
    model.attach(app);
    app->add_option("--steps", steps, "number of Euler steps")->required();
    app->add_option("--dt", dt, "time step in days")->capture_default_str();
    y0_opt = app->add_option("--y0", y0, "initial latent value (default: stationary draw)");
    app->add_option("--seed", seed, "random seed")->capture_default_str();
    app->add_option("--out", out, "output file, '-' for stdout")->capture_default_str();
  }

  int run(Context& ctx) const {
    SimConfig cfg;
    cfg.spec = model.require();
    cfg.n_steps = steps;
    cfg.dt = dt;
    cfg.seed = seed;
    if (*y0_opt) cfg.y0 = y0;
    cfg.validate();
    ctx.phase = Phase::Compute;
    emit(series_table(simulate_path(cfg)), out, ctx.out);
    return kOk;
  }
};

struct MlOptions {
  std::size_t window = 10;
  std::size_t iterations = 100000;
  double vol_floor = 1e-6;
  unsigned threads = 1;

  void attach(CLI::App* app) {
    app->add_option("--window", window, "days per window (s)")->capture_default_str();
    app->add_option("--iterations", iterations, "candidates per window (I)")->capture_default_str();
    app->add_option("--vol-floor", vol_floor, "lower bound on |dX/dW1|")->capture_default_str();
    app->add_option("--threads", threads, "worker threads; output does not depend on it")
        ->capture_default_str();
  }

  MlConfig config(Seed seed, std::ostream& err) const {
    MlConfig cfg;
    cfg.window = window;
    cfg.iterations = iterations;
    cfg.seed = seed;
    cfg.vol_floor = vol_floor;
    cfg.threads = threads;
    cfg.validate();
    if (iterations < 1000) {
      err << "warning: --iterations " << iterations
          << " is far below the reference 100000; estimates will be noisy\n";
    }
    return cfg;
  }
};

struct EstimateCmd {
  std::string estimator;
  ModelOptions model;
  InputOptions input;
  MlOptions ml;
  unsigned long long seed = default_seed();
  std::string out = "-";

  void attach(CLI::App* app) {
    app->add_option("--estimator", estimator, "gbm | prop | decon | ml")
        ->required()
        ->check(CLI::IsMember({"gbm", "prop", "decon", "ml"}, CLI::ignore_case));
    model.attach(app);
    input.attach(app);
    ml.attach(app);
    app->add_option("--seed", seed, "random seed")->capture_default_str();
    app->add_option("--out", out, "output file, '-' for stdout")->capture_default_str();
  }

  int run(Context& ctx) const {
    std::string name = estimator;
    std::transform(name.begin(), name.end(), name.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    std::optional<ModelSpec> spec;
    std::optional<MlConfig> cfg;
    if (name == "ml") {
      spec = model.require();
      cfg = ml.config(seed, ctx.err);
    }
    const auto loaded = load_input(input);
    ctx.phase = Phase::Compute;

    VolSeries vol;
    if (name == "gbm") {
      const double s = sigma_gbm(loaded.returns);
      vol.sigma.assign(loaded.returns.size(), s);
      vol.estimator = "gbm";
      vol.dates = loaded.returns.dates;
    } else if (name == "prop") {
      vol = sigma_prop(loaded.returns);
    } else if (name == "decon") {
      vol = sigma_decon(loaded.returns, derive_seed(seed, "decon"));
    } else {
      SeriesDiagnostics diag;
      vol = estimate_series(loaded.returns, *spec, *cfg, &diag);
      if (diag.floored_fraction() > 0.01) {
        ctx.err << "warning: " << diag.floored_fraction() * 100.0
                << "% of candidate points hit the volatility floor\n";
      }
    }
    emit(series_table(vol), out, ctx.out);
    return kOk;
  }
};

struct AnalyzeCmd {
  std::string what;
  InputOptions input;
  ModelOptions model;
  std::string vol_file;
  CLI::Option* vol_opt = nullptr;
  std::string of = "vol";
  std::size_t bins = 50;
  std::string scale = "linear";
  std::size_t max_lag = 100;
  double sigma_s = 0.0;
  CLI::Option* sigma_s_opt = nullptr;
  bool artificial = false;
  double l_min = 0.1;
  double l_max = 10.0;
  std::size_t points = 30;
  unsigned long long seed = default_seed();
  std::string out = "-";

  void attach(CLI::App* app) {
    app->add_option("--what", what, "pdf | acf | leverage | mfpt")
        ->required()
        ->check(CLI::IsMember({"pdf", "acf", "leverage", "mfpt"}, CLI::ignore_case));
    input.attach(app);
    model.attach(app);
    vol_opt = app->add_option("--vol", vol_file, "volatility series file");
    app->add_option("--of", of, "pdf target: vol | returns")
        ->check(CLI::IsMember({"vol", "returns"}))
        ->capture_default_str();
    app->add_option("--bins", bins, "histogram bins")->capture_default_str();
    app->add_option("--scale", scale, "histogram bins: linear | log")
        ->check(CLI::IsMember({"linear", "log"}))
        ->capture_default_str();
    app->add_option("--max-lag", max_lag, "largest lag in days")->capture_default_str();
    sigma_s_opt = app->add_option("--sigma-s", sigma_s, "stationary volatility for L = lambda/sigma_s");
    app->add_flag("--artificial", artificial,
                  "use returns rebuilt from the volatility series with fresh noise");
    app->add_option("--l-min", l_min, "smallest threshold L")->capture_default_str();
    app->add_option("--l-max", l_max, "largest threshold L")->capture_default_str();
    app->add_option("--points", points, "thresholds, log-spaced")->capture_default_str();
    app->add_option("--seed", seed, "seed for --artificial")->capture_default_str();
    app->add_option("--out", out, "output file, '-' for stdout")->capture_default_str();
  }

  int run(Context& ctx) const {
    std::string kind = what;
    std::transform(kind.begin(), kind.end(), kind.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    const auto spec = model.resolve();

    std::optional<LoadedInput> loaded;
    if (input.given()) loaded = load_input(input);
    std::optional<VolSeries> vol;
    if (*vol_opt) {
      vol = load_vol(vol_file);
    } else if (loaded && loaded->truth) {
      vol = loaded->truth;
    }
    const auto need_vol = [&]() -> const VolSeries& {
      if (!vol) throw UsageError("--what " + kind + " needs --vol (or --path)");
      return *vol;
    };
    const auto returns = [&]() -> ReturnSeries {
      if (artificial) return artificial_returns(need_vol(), derive_seed(seed, "artificial"));
      if (!loaded) throw UsageError("--what " + kind + " needs --prices, --returns or --path");
      return loaded->returns;
    };
    const auto meta_common = [&](AnalysisTable& table) {
      if (artificial) table.meta("returns", "artificial").meta("seed", std::to_string(seed));
      if (vol) table.meta("estimator", vol->estimator);
    };

    if (kind == "pdf") {
      const auto bin_scale = scale == "log" ? BinScale::Log : BinScale::Linear;
      std::vector<double> samples;
      if (of == "vol") {
        const auto v = need_vol().valid();
        samples.assign(v.begin(), v.end());
      } else {
        samples = returns().dx;
      }
      ctx.phase = Phase::Compute;
      auto table = to_table(pdf(samples, bins, bin_scale));
      table.meta("of", of);
      meta_common(table);
      emit(table, out, ctx.out);
    } else if (kind == "acf") {
      const auto& v = need_vol();
      ctx.phase = Phase::Compute;
      auto table = acf_table(autocorrelation(v, max_lag));
      meta_common(table);
      emit(table, out, ctx.out);
    } else if (kind == "leverage") {
      const auto& v = need_vol();
      const auto r = returns();
      if (artificial) throw UsageError("--artificial does not apply to leverage");
      ctx.phase = Phase::Compute;
      auto table = to_table(leverage(r, v, max_lag));
      meta_common(table);
      emit(table, out, ctx.out);
    } else {
      double s = 0.0;
      std::string source;
      if (*sigma_s_opt) {
        s = sigma_s;
        source = "flag";
      } else if (spec) {
        s = stationary_vol_mean(*spec);
        source = std::string("model:") + std::string(to_string(spec->kind));
      } else if (vol && vol->spec) {
        s = stationary_vol_mean(*vol->spec);
        source = std::string("model:") + std::string(to_string(vol->spec->kind));
      } else {
        throw UsageError("--what mfpt needs --sigma-s or a model");
      }
      const auto r = returns();
      const auto levels = log_thresholds(l_min, l_max, points);
      ctx.phase = Phase::Compute;
      std::vector<double> abs_dx(r.dx.size());
      std::transform(r.dx.begin(), r.dx.end(), abs_dx.begin(), [](double x) { return std::abs(x); });
      const auto curve = mfpt(abs_dx, s, levels);
      auto table = to_table(curve);
      table.meta("sigma_s_source", source);
      for (const auto& [range, key] : {std::pair{LRange::Below1, "beta_below_1"},
                                       std::pair{LRange::Above1, "beta_above_1"}}) {
        try {
          table.meta(key, power_law_fit(curve, range).slope);
        } catch (const InsufficientData&) {
          table.meta(key, "NA");
        }
      }
      meta_common(table);
      emit(table, out, ctx.out);
    }
    return kOk;
  }
};

struct PredictCmd {
  InputOptions input;
  std::string vol_file;
  CLI::Option* vol_opt = nullptr;
  std::string gamma_table;
  CLI::Option* gamma_opt = nullptr;
  std::string horizons = "1..100";
  std::size_t median_h = 1;
  std::size_t bins = 20;
  std::size_t min_count = kDefaultMinCount;
  std::size_t split_h = 7;
  std::string out;

  void attach(CLI::App* app) {
    input.attach(app);
    vol_opt = app->add_option("--vol", vol_file, "volatility series file");
    gamma_opt = app->add_option("--gamma-table", gamma_table,
                                "fit an existing (h, gamma) table instead of scanning");
    app->add_option("--horizons", horizons, "'a..b' or comma list")->capture_default_str();
    app->add_option("--median-h", median_h, "horizon of the reported median curve")->capture_default_str();
    app->add_option("--bins", bins, "ln sigma bins")->capture_default_str();
    app->add_option("--min-count", min_count, "minimum points per bin")->capture_default_str();
    app->add_option("--split-h", split_h, "segment boundary; 0 fits one line")->capture_default_str();
    app->add_option("--out", out, "output prefix (_median, _gamma, _fit .tsv)")->required();
  }

  int run(Context& ctx) const {
    const std::optional<std::size_t> split =
        split_h == 0 ? std::nullopt : std::optional<std::size_t>(split_h);
    std::vector<GammaPoint> scan;
    if (*gamma_opt) {
      const auto table = AnalysisTable::load(gamma_table);
      const auto& cols = table.columns();
      const auto h_col = std::find(cols.begin(), cols.end(), "h") - cols.begin();
      const auto g_col = std::find(cols.begin(), cols.end(), "gamma") - cols.begin();
      if (h_col == static_cast<long>(cols.size()) || g_col == static_cast<long>(cols.size())) {
        throw SchemaError("gamma table needs 'h' and 'gamma' columns");
      }
      for (const auto& row : table.rows()) {
        const double h = parse_number(row[h_col]);
        if (!(h >= 1.0) || h != std::floor(h)) throw ValidationError("gamma table h must be >= 1");
        scan.push_back({static_cast<std::size_t>(h), parse_number(row[g_col]), 0.0});
      }
      ctx.phase = Phase::Compute;
    } else {
      const auto hs = parse_horizons(horizons);
      const auto loaded = load_input(input);
      VolSeries vol;
      if (*vol_opt) {
        vol = load_vol(vol_file);
      } else if (loaded.truth) {
        vol = *loaded.truth;
      } else {
        throw UsageError("predict needs --vol (or --path)");
      }
      if (vol.size() != loaded.returns.size()) {
        throw ValidationError("volatility and returns series differ in length");
      }
      for (const auto h : hs) {
        if (h >= loaded.returns.size()) {
          throw ValidationError("horizon " + std::to_string(h) + " exceeds the series length");
        }
      }
      ctx.phase = Phase::Compute;
      const auto [x, y] = horizon_pairs(loaded.returns, vol, median_h);
      const auto [curve, fit] = conditional_median_regression(x, y, bins, min_count);
      auto median_table = to_table(curve, fit);
      median_table.meta("h", std::to_string(median_h)).meta("estimator", vol.estimator);
      median_table.save(out + "_median.tsv");
      scan = gamma_horizon_scan(loaded.returns, vol, hs, bins, min_count);
    }
    to_table(std::span<const GammaPoint>(scan)).save(out + "_gamma.tsv");
    to_table(fit_gamma_loglinear(scan, split)).save(out + "_fit.tsv");
    return kOk;
  }
};

struct CompareCmd {
  InputOptions input;
  MlOptions ml;
  std::string models = "expou,ou,heston";
  bool est_equals_decon = false;
  unsigned long long seed = default_seed();
  std::string out = "-";

  void attach(CLI::App* app) {
    input.attach(app);
    ml.attach(app);
    app->add_option("--models", models, "comma list of dji-calibrated models")
        ->capture_default_str();
    app->add_flag("--est-equals-decon", est_equals_decon,
                  "use the deconvoluted series as the estimate (sanity check, ratio 1)");
    app->add_option("--seed", seed, "random seed")->capture_default_str();
    app->add_option("--out", out, "output file, '-' for stdout")->capture_default_str();
  }

  int run(Context& ctx) const {
    std::vector<ModelSpec> specs;
    std::size_t start = 0;
    while (start <= models.size()) {
      const auto comma = std::min(models.find(',', start), models.size());
      const auto name = models.substr(start, comma - start);
      specs.push_back(*preset("dji-" + std::string(to_string(parse_model_kind(name)))));
      start = comma + 1;
    }
    const auto cfg = ml.config(seed, ctx.err);
    const auto loaded = load_input(input);
    ctx.phase = Phase::Compute;

    const auto decon = sigma_decon(loaded.returns, derive_seed(seed, "decon"));
    AnalysisTable table({"model", "var_est", "var_decon", "ratio"});
    table.meta("operation", "compare")
        .meta("input", loaded.returns.label)
        .meta("window", std::to_string(cfg.window))
        .meta("iterations", std::to_string(cfg.iterations))
        .meta("seed", std::to_string(seed))
        .meta("estimate", est_equals_decon ? "decon" : "ml");
    for (const auto& spec : specs) {
      const auto est = est_equals_decon ? decon : estimate_series(loaded.returns, spec, cfg);
      std::vector<double> a;
      std::vector<double> b;
      for (std::size_t t = est.first_valid; t < est.size(); ++t) {
        a.push_back(est.sigma[t]);
        b.push_back(decon.sigma[t]);
      }
      table.add_row({std::string(to_string(spec.kind)), format_number(variance(a)),
                     format_number(variance(b)), format_number(variance_ratio(est, decon))});
    }
    emit(table, out, ctx.out);
    return kOk;
  }
};

}  // namespace

unsigned long long default_seed() {
  if (const char* env = std::getenv("VOLFILTER_SEED"); env != nullptr && *env != '\0') {
    unsigned long long v = 0;
    const auto* end = env + std::char_traits<char>::length(env);
    const auto [ptr, ec] = std::from_chars(env, end, v);
    if (ec == std::errc() && ptr == end) return v;
  }
  return 1;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hidden volatility estimation under stochastic volatility models", "volfilter"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  SimulateCmd simulate;
  EstimateCmd estimate;
  AnalyzeCmd analyze;
  PredictCmd predict;
  CompareCmd compare;
  auto* sim_app = app.add_subcommand("simulate", "Euler simulation of a joint (X, Y) path");
  auto* est_app = app.add_subcommand("estimate", "volatility series from returns");
  auto* ana_app = app.add_subcommand("analyze", "pdf, autocorrelation, leverage or MFPT tables");
  auto* pre_app = app.add_subcommand("predict", "conditional median regressions over horizons");
  auto* cmp_app = app.add_subcommand("compare", "variance reduction of ML against deconvolution");
  simulate.attach(sim_app);
  estimate.attach(est_app);
  analyze.attach(ana_app);
  predict.attach(pre_app);
  compare.attach(cmp_app);

  // CLI11 consumes arguments from the back.
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  Context ctx{out, err};
  try {
    if (*sim_app) return simulate.run(ctx);
    if (*est_app) return estimate.run(ctx);
    if (*ana_app) return analyze.run(ctx);
    if (*pre_app) return predict.run(ctx);
    return compare.run(ctx);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ValidationError& e) {
    err << "invalid input: " << e.what() << "\n";
    return kDataError;
  } catch (const SchemaError& e) {
    err << "invalid input: " << e.what() << "\n";
    return kDataError;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kDataError;
  } catch (const Error& e) {
    const bool input = ctx.phase == Phase::Input;
    err << (input ? "invalid input: " : "computation failed: ") << e.what() << "\n";
    return input ? kDataError : kComputeError;
  } catch (const std::exception& e) {
    err << "computation failed: " << e.what() << "\n";
    return kComputeError;
  }
}

}  // namespace volfilter::cli
