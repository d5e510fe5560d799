// Copyright (c) 2026, The dgflow authors
// SPDX-License-Identifier: Apache-2.0

// dgflow command-line tool. Every command writes a run manifest next to its
// outputs; `verify-manifest` re-hashes them.

#include <chrono>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dgflow/csv.hpp"
#include "dgflow/datasets.hpp"
#include "dgflow/errors.hpp"
#include "dgflow/manifest.hpp"
#include "dgflow/metrics.hpp"
#include "dgflow/models.hpp"
#include "dgflow/oracle.hpp"
#include "dgflow/parallel.hpp"
#include "dgflow/pipeline.hpp"
#include "dgflow/refine.hpp"
#include "dgflow/svg.hpp"
#include "dgflow/training.hpp"

namespace fs = std::filesystem;
using namespace dgflow;
using Json = models::Json;
using nn::Matrix;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitVerification = 4;

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Flags that override keys of the JSON config, but only when given.
class Overrides {
 public:
  template <class T>
  CLI::Option* add(CLI::App* app, const std::string& flag, const std::string& key, T init,
                   const std::string& help) {
    auto& slot = storage<T>().emplace_back(std::move(init));
    auto* opt = app->add_option(flag, slot, help)->capture_default_str();
    apply_.push_back([opt, key, &slot](Json& j) {
      if (opt->count() > 0) j[key] = slot;
    });
    return opt;
  }

  Json merge(const Json& base) const {
    Json j = base.is_null() ? Json::object() : base;
    for (const auto& f : apply_) f(j);
    return j;
  }

 private:
  template <class T>
  std::deque<T>& storage() {
    if constexpr (std::is_same_v<T, int>) return ints_;
    else if constexpr (std::is_same_v<T, std::int64_t>) return longs_;
    else if constexpr (std::is_same_v<T, double>) return doubles_;
    else if constexpr (std::is_same_v<T, std::uint64_t>) return seeds_;
    else return strings_;
  }
  std::deque<int> ints_;
  std::deque<std::int64_t> longs_;
  std::deque<double> doubles_;
  std::deque<std::uint64_t> seeds_;
  std::deque<std::string> strings_;
  std::vector<std::function<void(Json&)>> apply_;
};

Json read_config(const std::string& path) {
  if (path.empty()) return Json::object();
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  try {
    Json j = Json::parse(in);
    if (!j.is_object()) throw ConfigError("config '" + path + "' is not a JSON object");
    return j;
  } catch (const Json::parse_error& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
}

template <class T>
T get_or(const Json& j, const std::string& key, T fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  try {
    return j[key].get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create '" + dir.string() + "': " + ec.message());
}

void write_points(const fs::path& path, const Matrix& x) {
  io::write_csv(path, {"x0", "x1"}, x);
}

Matrix read_points(const fs::path& path) {
  auto t = io::read_csv(path);
  if (t.header != std::vector<std::string>{"x0", "x1"})
    throw ConfigError("'" + path.string() + "' does not have the x0,x1 header");
  return std::move(t.rows);
}

void write_json(const fs::path& path, const Json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << '\n';
}

std::string joined_args(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

// Generator from a generator checkpoint or the decoder of a VAE checkpoint.
models::GeneratorModel load_sampler_generator(const fs::path& path) {
  const auto ck = models::load_checkpoint(path);
  if (ck.kind() == "generator") return ck.generator();
  if (ck.kind() == "vae") return models::decoder_as_generator(ck.vae());
  throw ConfigError("'" + path.string() + "' holds a " + ck.kind() +
                    ", expected a generator or vae");
}

refine::RatioStack load_stack(const std::vector<std::string>& paths) {
  if (paths.empty()) throw ConfigError("at least one --disc checkpoint is required");
  refine::RatioStack st;
  for (const auto& p : paths) {
    const auto ck = models::load_checkpoint(p);
    if (ck.kind() != "discriminator")
      throw ConfigError("'" + p + "' holds a " + ck.kind() + ", expected a discriminator");
    st.discs.push_back(ck.discriminator());
  }
  return st;
}

struct Common {
  int threads = default_threads();
  std::string command;
};

// ---------------------------------------------------------------------------

struct GenDataArgs {
  std::string dataset;
  std::size_t n = 100000;
  std::uint64_t seed = 0;
  std::string out;
  std::size_t holdout = 0;
  std::string holdout_out;
};

void cmd_gen_data(const GenDataArgs& a, const Common& c) {
  const auto t0 = Clock::now();
  const auto kind = data::parse_dataset(a.dataset);
  if (a.n == 0) throw ConfigError("--n must be positive");
  if (a.holdout > 0 && a.holdout_out.empty())
    throw ConfigError("--holdout needs --holdout-out");
  const std::size_t total = a.n + a.holdout;
  const auto ds = kind == data::DatasetKind::Gaussians25 ? data::gen_25gaussians(total, a.seed)
                                                         : data::gen_swissroll(total, a.seed);
  const fs::path out(a.out);
  if (out.has_parent_path()) ensure_dir(out.parent_path());
  write_points(out, ds.points.topRows(static_cast<Eigen::Index>(a.n)));
  if (a.holdout > 0) {
    if (fs::path(a.holdout_out).has_parent_path()) ensure_dir(fs::path(a.holdout_out).parent_path());
    write_points(a.holdout_out, ds.points.bottomRows(static_cast<Eigen::Index>(a.holdout)));
  }

  manifest::RunManifest m;
  m.command = c.command;
  m.config = {{"dataset", data::to_string(kind)},
              {"n", a.n},
              {"holdout", a.holdout},
              {"normalization", ds.normalization}};
  m.seeds = {{"seed", a.seed}};
  const fs::path mpath = fs::path(a.out + ".manifest.json");
  const fs::path base = mpath.parent_path();
  m.add_output(out, base);
  if (a.holdout > 0) m.add_output(a.holdout_out, base);
  m.timings = {{"total_s", since(t0)}};
  m.save(mpath);
  std::printf("wrote %zu rows to %s\n", a.n, a.out.c_str());
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string kind;
  std::string data;
  std::string config;
  std::string out_dir;
  std::string resume;
  std::vector<std::string> disc;
  std::string gen_phi;
  std::string target;
  Overrides ov;
};

void cmd_train(TrainArgs& a, const Common& c) {
  const auto t0 = Clock::now();
  const fs::path out(a.out_dir);
  ensure_dir(out);
  const Json eff = a.ov.merge(read_config(a.config));
  manifest::RunManifest m;
  m.command = c.command;
  m.config = eff;
  m.config["kind"] = a.kind;

  if (a.kind == "gan") {
    if (a.data.empty()) throw ConfigError("train gan needs --data");
    const Matrix x = read_points(a.data);
    m.add_input(a.data, out);
    auto cfg = train::GanConfig::from_json(eff);
    std::optional<train::GanState> resume;
    train::LossTrace previous;
    if (!a.resume.empty()) {
      const fs::path r(a.resume);
      const auto g = models::load_checkpoint(r / "generator.json");
      const auto d = models::load_checkpoint(r / "discriminator.json");
      const auto iters = get_or<std::int64_t>(g.meta, "iterations", -1);
      if (iters < 0) throw ConfigError("generator checkpoint has no iteration count");
      resume = train::GanState{g.generator(), d.discriminator(), iters};
      if (fs::exists(r / "loss_trace.csv")) previous = train::LossTrace::read_csv(r / "loss_trace.csv");
      m.add_input(r / "generator.json", out);
      m.add_input(r / "discriminator.json", out);
    }
    auto res = train::train_gan(x, cfg, resume);
    previous.has_gp = res.trace.has_gp;
    previous.records.insert(previous.records.end(), res.trace.records.begin(),
                            res.trace.records.end());
    const Json meta = {{"iterations", res.iterations}, {"config", cfg.to_json()}};
    models::save_checkpoint({res.gen, meta}, out / "generator.json");
    models::save_checkpoint({res.disc, meta}, out / "discriminator.json");
    previous.write_csv(out / "loss_trace.csv");
    m.config = cfg.to_json();
    m.config["kind"] = "gan";
    m.seeds = {{"seed", cfg.seed}};
    m.add_output(out / "generator.json", out);
    m.add_output(out / "discriminator.json", out);
    m.add_output(out / "loss_trace.csv", out);
    if (!res.trace.records.empty())
      m.metrics = {{"final_loss_d", res.trace.records.back().loss_d},
                   {"final_loss_g", res.trace.records.back().loss_g}};
  } else if (a.kind == "vae") {
    if (a.data.empty()) throw ConfigError("train vae needs --data");
    const Matrix x = read_points(a.data);
    m.add_input(a.data, out);
    train::VaeConfig cfg;
    cfg.batch = get_or(eff, "batch", cfg.batch);
    cfg.lr = get_or(eff, "lr", cfg.lr);
    cfg.seed = get_or(eff, "seed", cfg.seed);
    cfg.arch.hidden = get_or(eff, "hidden", cfg.arch.hidden);
    cfg.arch.depth = get_or(eff, "depth", cfg.arch.depth);
    const int epochs = get_or(eff, "epochs", 20);
    auto res = train::train_vae(x, epochs, cfg);
    models::save_checkpoint({res.vae, {{"epochs", epochs}}}, out / "vae.json");
    Matrix elbo(static_cast<Eigen::Index>(res.epoch_elbo.size()), 2);
    for (std::size_t i = 0; i < res.epoch_elbo.size(); ++i)
      elbo.row(static_cast<Eigen::Index>(i)) << static_cast<double>(i), res.epoch_elbo[i];
    io::write_csv(out / "elbo.csv", {"epoch", "elbo"}, elbo);
    m.config = {{"kind", "vae"}, {"epochs", epochs}, {"batch", cfg.batch}, {"lr", cfg.lr},
                {"hidden", cfg.arch.hidden}, {"depth", cfg.arch.depth}};
    m.seeds = {{"seed", cfg.seed}};
    m.add_output(out / "vae.json", out);
    m.add_output(out / "elbo.csv", out);
    if (!res.epoch_elbo.empty()) m.metrics = {{"final_elbo", res.epoch_elbo.back()}};
  } else if (a.kind == "corrector") {
    if (a.disc.size() != 1 || a.gen_phi.empty() || a.target.empty())
      throw ConfigError("train corrector needs one --disc, --gen-phi and --target");
    const auto d_phi = load_stack(a.disc).discs.front();
    const auto g_phi = load_sampler_generator(a.gen_phi);
    const auto g_theta = load_sampler_generator(a.target);
    train::CorrectorConfig cfg;
    cfg.iters = get_or(eff, "iters", cfg.iters);
    cfg.batch = get_or(eff, "batch", cfg.batch);
    cfg.sgd_lr = get_or(eff, "sgd_lr", cfg.sgd_lr);
    cfg.momentum = get_or(eff, "momentum", cfg.momentum);
    cfg.seed = get_or(eff, "seed", cfg.seed);
    const auto d_lambda = train::finetune_corrector(d_phi, train::sampler_of(g_phi),
                                                    train::sampler_of(g_theta), cfg);
    models::save_checkpoint({d_lambda, {{"iters", cfg.iters}}}, out / "corrector.json");
    m.config = {{"kind", "corrector"}, {"iters", cfg.iters}, {"batch", cfg.batch},
                {"sgd_lr", cfg.sgd_lr}, {"momentum", cfg.momentum}};
    m.seeds = {{"seed", cfg.seed}};
    for (const auto& p : {a.disc.front(), a.gen_phi, a.target}) m.add_input(p, out);
    m.add_output(out / "corrector.json", out);
  } else {
    throw ConfigError("unknown model kind '" + a.kind + "' (expected gan, vae or corrector)");
  }
  m.timings = {{"total_s", since(t0)}};
  m.save(out / "manifest.json");
  std::printf("trained %s in %.1f s, outputs in %s\n", a.kind.c_str(), since(t0),
              a.out_dir.c_str());
}

// ---------------------------------------------------------------------------

struct RefineArgs {
  std::string gen;
  std::vector<std::string> disc;
  std::string config;
  std::string out_dir;
  std::string samples;
  Overrides ov;
};

refine::FlowConfig flow_from(const Json& eff, int threads) {
  refine::FlowConfig f;
  f.eta = get_or(eff, "eta", f.eta);
  f.steps = get_or(eff, "steps", f.steps);
  f.gamma = get_or(eff, "gamma", f.gamma);
  f.space = refine::parse_space(get_or<std::string>(eff, "space", "latent"));
  f.divergence = FDivergence::parse(get_or<std::string>(eff, "divergence", "kl"));
  f.seed = get_or(eff, "seed", f.seed);
  f.snapshot_every = get_or(eff, "snapshot_every", f.snapshot_every);
  f.threads = threads;
  return f;
}

refine::DdlsConfig ddls_from(const Json& eff, int threads) {
  refine::DdlsConfig d;
  d.steps = get_or(eff, "steps", d.steps);
  d.step_size = get_or(eff, "step_size", d.step_size);
  d.noise_scale = get_or(eff, "noise_scale", d.noise_scale);
  d.seed = get_or(eff, "seed", d.seed);
  d.snapshot_every = get_or(eff, "snapshot_every", d.snapshot_every);
  d.threads = threads;
  return d;
}

refine::DotConfig dot_from(const Json& eff, int threads) {
  refine::DotConfig d;
  d.steps = get_or(eff, "steps", d.steps);
  d.adam.lr = get_or(eff, "lr", d.adam.lr);
  d.lambda_prox = get_or(eff, "lambda_prox", d.lambda_prox);
  d.snapshot_every = get_or(eff, "snapshot_every", d.snapshot_every);
  d.threads = threads;
  return d;
}

void cmd_refine(RefineArgs& a, const Common& c) {
  const auto t0 = Clock::now();
  const fs::path out(a.out_dir);
  ensure_dir(out);
  Json eff = a.ov.merge(read_config(a.config));
  const auto method = get_or<std::string>(eff, "method", "dgflow");
  const auto n = get_or<std::size_t>(eff, "n", 5000);
  const auto sample_seed = get_or<std::uint64_t>(eff, "sample_seed", 0);
  // DDLS keeps its own default step count unless one was given.
  if (method == "ddls" && !eff.contains("steps")) eff["steps"] = refine::DdlsConfig{}.steps;

  const auto stack = load_stack(a.disc);
  manifest::RunManifest m;
  m.command = c.command;
  for (const auto& d : a.disc) m.add_input(d, out);

  refine::FlowResult res;
  Matrix pre;
  if (method == "dgflow") {
    const auto flow = flow_from(eff, c.threads);
    eff["divergence"] = flow.divergence.name();
    eff["space"] = refine::to_string(flow.space);
    if (flow.space == refine::Space::Data) {
      if (!a.samples.empty()) {
        pre = read_points(a.samples);
        m.add_input(a.samples, out);
      } else {
        if (a.gen.empty()) throw ConfigError("data-space refinement needs --samples or --gen");
        pre = models::generate(load_sampler_generator(a.gen), models::sample_prior(n, sample_seed));
        m.add_input(a.gen, out);
      }
      res = refine::refine_data_space(
          stack, refine::ParticleBatch::with_sequential_ids(pre, refine::Space::Data), flow);
    } else {
      if (a.gen.empty()) throw ConfigError("latent refinement needs --gen");
      const auto gen = load_sampler_generator(a.gen);
      m.add_input(a.gen, out);
      const auto z = models::sample_prior(n, sample_seed);
      pre = models::generate(gen, z);
      res = refine::refine_latent(
          gen, stack, refine::ParticleBatch::with_sequential_ids(z, refine::Space::Latent), flow);
    }
  } else if (method == "ddls" || method == "dot") {
    if (a.gen.empty()) throw ConfigError(method + " needs --gen");
    if (get_or<std::string>(eff, "space", "latent") != "latent")
      throw ConfigError(method + " only runs in latent space");
    const auto gen = load_sampler_generator(a.gen);
    m.add_input(a.gen, out);
    const auto z = models::sample_prior(n, sample_seed);
    pre = models::generate(gen, z);
    const auto batch = refine::ParticleBatch::with_sequential_ids(z, refine::Space::Latent);
    res = method == "ddls" ? refine::ddls_refine(gen, stack, batch, ddls_from(eff, c.threads))
                           : refine::dot_refine(gen, stack, batch, dot_from(eff, c.threads));
  } else {
    throw ConfigError("unknown method '" + method + "' (expected dgflow, ddls or dot)");
  }

  write_points(out / "pre.csv", pre);
  write_points(out / "post.csv", res.samples);
  m.add_output(out / "pre.csv", out);
  m.add_output(out / "post.csv", out);
  if (!res.snapshots.empty()) ensure_dir(out / "snapshots");
  Json snaps = Json::array();
  for (const auto& s : res.snapshots) {
    char name[32];
    std::snprintf(name, sizeof name, "step_%05lld.csv", static_cast<long long>(s.step));
    write_points(out / "snapshots" / name, s.samples);
    m.add_output(out / "snapshots" / name, out);
    snaps.push_back({{"step", s.step}, {"path", std::string("snapshots/") + name}});
  }
  eff["method"] = method;
  eff["n"] = n;
  m.config = eff;
  m.config["snapshots"] = snaps;
  m.seeds = {{"sample_seed", sample_seed}, {"noise_seed", get_or<std::uint64_t>(eff, "seed", 0)}};
  m.timings = {{"total_s", since(t0)}};
  m.save(out / "manifest.json");
  std::printf("refined %zu samples with %s in %.1f s\n", static_cast<std::size_t>(pre.rows()),
              method.c_str(), since(t0));
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string samples;
  std::string reference;
  int runs = 10;
  int per_run = 5000;
  std::string out;
};

void cmd_eval(const EvalArgs& a, const Common& c) {
  const auto t0 = Clock::now();
  const Matrix x = read_points(a.samples);
  const Matrix ref = read_points(a.reference);
  const auto s = metrics::evaluate_run(x, ref, a.runs, a.per_run, 0, c.threads);
  const fs::path out(a.out);
  if (out.has_parent_path()) ensure_dir(out.parent_path());
  write_json(out, s.to_json());
  manifest::RunManifest m;
  m.command = c.command;
  m.config = {{"runs", a.runs}, {"per_run", a.per_run}, {"bandwidth", metrics::kKdeBandwidth}};
  const fs::path base = fs::path(a.out + ".manifest.json").parent_path();
  m.add_input(a.samples, base);
  m.add_input(a.reference, base);
  m.add_output(out, base);
  m.metrics = s.to_json();
  m.metrics.erase("runs");
  m.timings = {{"total_s", since(t0)}};
  m.save(a.out + ".manifest.json");
  std::printf("%%HQ %.2f +- %.2f   KDE %.1f +- %.1f\n", s.pct_hq_mean, s.pct_hq_std, s.kde_mean,
              s.kde_std);
}

// ---------------------------------------------------------------------------

struct CompareArgs {
  std::string data;
  std::string reference;
  std::string gen;
  std::string disc;
  std::string config;
  std::string out_dir;
  Overrides ov;
};

void cmd_compare(CompareArgs& a, const Common& c) {
  const auto t0 = Clock::now();
  const fs::path out(a.out_dir);
  ensure_dir(out);
  const Json eff = a.ov.merge(read_config(a.config));
  manifest::RunManifest m;
  m.command = c.command;

  models::GeneratorModel gen;
  models::DiscriminatorModel disc;
  double train_s = 0.0;
  if (!a.gen.empty() || !a.disc.empty()) {
    if (a.gen.empty() || a.disc.empty()) throw ConfigError("give both --gen and --disc, or neither");
    gen = models::load_checkpoint(a.gen).generator();
    disc = models::load_checkpoint(a.disc).discriminator();
    m.add_input(a.gen, out);
    m.add_input(a.disc, out);
  } else {
    if (a.data.empty()) throw ConfigError("compare needs --data to train, or --gen and --disc");
    const Matrix x = read_points(a.data);
    m.add_input(a.data, out);
    const Json gan_json = eff.contains("gan") ? eff["gan"] : Json::object();
    auto cfg = train::GanConfig::from_json(gan_json);
    cfg.gen_iters = get_or(eff, "gen_iters", cfg.gen_iters);
    cfg.arch.hidden = get_or(eff, "hidden", cfg.arch.hidden);
    cfg.seed = get_or(eff, "train_seed", cfg.seed);
    cfg.gp_lambda = get_or(eff, "gp_lambda", cfg.gp_lambda);
    const auto tt = Clock::now();
    auto res = train::train_gan(x, cfg);
    train_s = since(tt);
    gen = res.gen;
    disc = res.disc;
    const Json meta = {{"iterations", res.iterations}, {"config", cfg.to_json()}};
    models::save_checkpoint({gen, meta}, out / "generator.json");
    models::save_checkpoint({disc, meta}, out / "discriminator.json");
    res.trace.write_csv(out / "loss_trace.csv");
    for (const char* f : {"generator.json", "discriminator.json", "loss_trace.csv"})
      m.add_output(out / f, out);
    m.config["gan"] = cfg.to_json();
  }
  if (a.reference.empty()) throw ConfigError("compare needs --reference (held-out real samples)");
  const Matrix ref = read_points(a.reference);
  m.add_input(a.reference, out);

  pipeline::CompareOptions opt;
  opt.n_samples = get_or(eff, "n", opt.n_samples);
  opt.runs = get_or(eff, "runs", opt.runs);
  opt.per_run = get_or(eff, "per_run", opt.per_run);
  opt.seed = get_or(eff, "seed", opt.seed);
  opt.flow = flow_from(eff, c.threads);
  opt.flow.steps = get_or(eff, "flow_steps", opt.flow.steps);
  opt.ddls.seed = opt.seed;
  opt.flow.seed = opt.seed;
  opt.threads = c.threads;
  const auto rows = pipeline::run_compare(gen, refine::RatioStack{{disc}}, ref, opt);

  std::vector<metrics::MethodRow> table;
  Json summaries = Json::object();
  std::vector<svg::Panel> panels;
  const Eigen::Index shown = std::min<Eigen::Index>(5000, ref.rows());
  const Matrix real = ref.topRows(shown);
  for (const auto& r : rows) {
    table.push_back({r.method, r.summary});
    summaries[r.method] = r.summary.to_json();
    summaries[r.method].erase("runs");
    summaries[r.method]["seconds"] = r.seconds;
    const Matrix pts = r.samples.topRows(std::min<Eigen::Index>(5000, r.samples.rows()));
    panels.push_back({r.method,
                      {{real, svg::kRealColor, 1.0, 0.4},
                       {pts, r.method == "base" ? svg::kBaseColor : svg::kRefinedColor, 1.0, 0.4}}});
    write_points(out / ("samples_" + r.method + ".csv"), r.samples);
    m.add_output(out / ("samples_" + r.method + ".csv"), out);
    std::printf("%-12s %%HQ %6.2f +- %4.2f   KDE %10.1f +- %6.1f   (%.1f s)\n", r.method.c_str(),
                r.summary.pct_hq_mean, r.summary.pct_hq_std, r.summary.kde_mean,
                r.summary.kde_std, r.seconds);
  }
  metrics::write_results_table(out / "results_table.csv", table);
  svg::write_scatter_panels(out / "panels.svg", panels, svg::Bounds{});
  m.add_output(out / "results_table.csv", out);
  m.add_output(out / "panels.svg", out);
  m.config["n"] = opt.n_samples;
  m.config["runs"] = opt.runs;
  m.config["per_run"] = opt.per_run;
  m.config["flow"] = {{"eta", opt.flow.eta}, {"steps", opt.flow.steps}, {"gamma", opt.flow.gamma}};
  m.seeds = {{"seed", opt.seed}};
  m.metrics = summaries;
  m.timings = {{"train_s", train_s}, {"total_s", since(t0)}};
  m.save(out / "manifest.json");
}

// ---------------------------------------------------------------------------

struct OracleArgs {
  std::string config;
  std::string out_dir;
  Overrides ov;
};

int cmd_oracle(OracleArgs& a, const Common& c) {
  const auto t0 = Clock::now();
  const fs::path out(a.out_dir);
  ensure_dir(out);
  const Json eff = a.ov.merge(read_config(a.config));
  const auto which = get_or<std::string>(eff, "case", "gaussian");
  manifest::RunManifest m;
  m.command = c.command;
  Json report;
  bool pass = false;
  if (which == "gaussian") {
    pipeline::GaussianCaseOptions o;
    o.particles = get_or(eff, "particles", o.particles);
    o.eta = get_or(eff, "eta", o.eta);
    o.gamma = get_or(eff, "gamma", o.gamma);
    o.seed = get_or(eff, "seed", o.seed);
    o.threads = c.threads;
    if (get_or<std::string>(eff, "div", "kl") != "kl")
      throw ConfigError("the gaussian case has a closed form only for --div kl");
    const auto r = pipeline::run_gaussian_case(o);
    Json checks = Json::array();
    for (const auto& k : r.checks)
      checks.push_back({{"t", k.t},
                        {"mean", k.mean},
                        {"mean_expected", k.mean_expected},
                        {"mean_rel_error", k.mean_rel_error},
                        {"var", k.var},
                        {"var_expected", k.var_expected},
                        {"var_rel_error", k.var_rel_error}});
    report = {{"case", "gaussian"},
              {"pass", r.pass},
              {"tolerance", o.tolerance},
              {"max_rel_error", r.max_rel_error},
              {"checks", checks}};
    m.config = {{"case", "gaussian"}, {"particles", o.particles}, {"eta", o.eta},
                {"gamma", o.gamma}, {"m0", o.m0}, {"s0_sq", o.s0_sq}};
    m.seeds = {{"seed", o.seed}};
    pass = r.pass;
    std::printf("gaussian: max relative moment error %.4f (tolerance %.2f)\n", r.max_rel_error,
                o.tolerance);
  } else if (which == "bimodal") {
    pipeline::BimodalCaseOptions o;
    o.divergence = FDivergence::parse(get_or<std::string>(eff, "div", "kl")).kind();
    o.gamma = get_or(eff, "gamma", o.gamma);
    o.t_end = get_or(eff, "t_end", o.t_end);
    o.particles = get_or(eff, "particles", o.particles);
    o.eta = get_or(eff, "eta", o.eta);
    o.cells = get_or(eff, "cells", o.cells);
    o.seed = get_or(eff, "seed", o.seed);
    o.threads = c.threads;
    const auto r = pipeline::run_bimodal_case(o);
    oracle::write_grid_csv(out / "grid.csv", o.t_end, r.grid, false);
    io::write_csv(out / "particles.csv", {"x"},
                  Eigen::Map<const Matrix>(r.particles.data(),
                                           static_cast<Eigen::Index>(r.particles.size()), 1));
    m.add_output(out / "grid.csv", out);
    m.add_output(out / "particles.csv", out);
    report = {{"case", "bimodal"},
              {"pass", r.pass},
              {"divergence", FDivergence(o.divergence).name()},
              {"gamma", o.gamma},
              {"ks", r.ks},
              {"ks_tolerance", o.ks_tolerance},
              {"max_mass_error", r.max_mass_error},
              {"energy_monotone", r.energy_monotone},
              {"max_energy_increase", r.max_energy_increase},
              {"grid_steps", r.grid_steps},
              {"grid_s", r.grid_seconds},
              {"particle_s", r.particle_seconds}};
    m.config = {{"case", "bimodal"}, {"div", FDivergence(o.divergence).name()},
                {"gamma", o.gamma}, {"t_end", o.t_end}, {"particles", o.particles},
                {"eta", o.eta}, {"cells", o.cells}};
    m.seeds = {{"seed", o.seed}};
    pass = r.pass;
    std::printf("bimodal %s gamma=%g: KS %.4f, mass error %.1e, F monotone %s\n",
                FDivergence(o.divergence).name().c_str(), o.gamma, r.ks, r.max_mass_error,
                r.energy_monotone ? "yes" : "no");
  } else {
    throw ConfigError("unknown oracle case '" + which + "' (expected gaussian or bimodal)");
  }
  write_json(out / "report.json", report);
  m.add_output(out / "report.json", out);
  m.metrics = report;
  m.timings = {{"total_s", since(t0)}};
  m.save(out / "manifest.json");
  std::printf("%s\n", pass ? "PASS" : "FAIL");
  return pass ? 0 : kExitVerification;
}

// ---------------------------------------------------------------------------

struct FieldArgs {
  std::vector<std::string> disc;
  std::string divergence = "kl";
  int grid = 25;
  std::vector<double> bounds{-1.5, 1.5, -1.5, 1.5};
  std::string out;
  std::string svg_out;
};

void cmd_field(const FieldArgs& a, const Common& c) {
  const auto t0 = Clock::now();
  if (a.grid < 2) throw ConfigError("--grid must be at least 2");
  if (a.bounds.size() != 4) throw ConfigError("--bounds takes x0 x1 y0 y1");
  const auto stack = load_stack(a.disc);
  const auto div = FDivergence::parse(a.divergence);
  const int g = a.grid;
  Matrix pts(static_cast<Eigen::Index>(g) * g, 2);
  for (int i = 0; i < g; ++i)
    for (int j = 0; j < g; ++j)
      pts.row(static_cast<Eigen::Index>(i) * g + j)
          << a.bounds[0] + (a.bounds[1] - a.bounds[0]) * i / (g - 1),
          a.bounds[2] + (a.bounds[3] - a.bounds[2]) * j / (g - 1);
  const auto lg = refine::logit_grad_data(stack, pts);
  const Matrix v = refine::drift(div, lg.logit, lg.grad);
  Matrix rows(pts.rows(), 4);
  rows << pts, v;
  const fs::path out(a.out);
  if (out.has_parent_path()) ensure_dir(out.parent_path());
  io::write_csv(out, {"x0", "x1", "v0", "v1"}, rows);
  manifest::RunManifest m;
  m.command = c.command;
  const fs::path base = fs::path(a.out + ".manifest.json").parent_path();
  for (const auto& d : a.disc) m.add_input(d, base);
  m.add_output(out, base);
  if (!a.svg_out.empty()) {
    svg::write_vector_field(a.svg_out, pts, v,
                            svg::Bounds{a.bounds[0], a.bounds[1], a.bounds[2], a.bounds[3]});
    m.add_output(a.svg_out, base);
  }
  m.config = {{"divergence", div.name()}, {"grid", g}, {"bounds", a.bounds}};
  m.timings = {{"total_s", since(t0)}};
  m.save(a.out + ".manifest.json");
}

int cmd_verify(const std::string& path) {
  const auto r = manifest::verify(path);
  for (const auto& p : r.problems) std::printf("%s\n", p.c_str());
  std::printf("%zu files checked, %zu problems\n", r.checked, r.problems.size());
  return r.ok() ? 0 : kExitVerification;
}

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  CLI::App app{"Discriminator-guided sample refinement with f-divergence gradient flows"};
  app.require_subcommand(1);
  Common common;
  common.command = joined_args(argc, argv);
  auto add_threads = [&](CLI::App* sub) {
    sub->add_option("--threads", common.threads, "worker threads (default: DGFLOW_THREADS or 1)")
        ->check(CLI::PositiveNumber);
  };

  GenDataArgs gd;
  auto* s_gen = app.add_subcommand("gen-data", "sample a 2D dataset to CSV");
  s_gen->add_option("dataset", gd.dataset, "25gaussians or swissroll")->required();
  s_gen->add_option("--n", gd.n, "rows")->capture_default_str();
  s_gen->add_option("--seed", gd.seed, "seed")->capture_default_str();
  s_gen->add_option("--out", gd.out, "output CSV")->required();
  s_gen->add_option("--holdout", gd.holdout, "extra rows written to --holdout-out");
  s_gen->add_option("--holdout-out", gd.holdout_out, "held-out CSV");
  add_threads(s_gen);

  TrainArgs tr;
  auto* s_train = app.add_subcommand("train", "train a GAN, VAE or density-ratio corrector");
  s_train->add_option("kind", tr.kind, "gan, vae or corrector")->required();
  s_train->add_option("--data", tr.data, "training CSV");
  s_train->add_option("--config", tr.config, "JSON config; flags override its keys");
  s_train->add_option("--out-dir", tr.out_dir, "output directory")->required();
  s_train->add_option("--resume", tr.resume, "directory of a previous GAN run to continue");
  s_train->add_option("--disc", tr.disc, "corrector: base discriminator d_phi");
  s_train->add_option("--gen-phi", tr.gen_phi, "corrector: generator paired with d_phi");
  s_train->add_option("--target", tr.target, "corrector: generator or VAE being improved");
  tr.ov.add<std::string>(s_train, "--loss", "loss", "wgan_gp", "ns, wgan_gp or wgan_sn");
  tr.ov.add<std::int64_t>(s_train, "--gen-iters", "gen_iters", 10000, "generator iterations");
  tr.ov.add<int>(s_train, "--disc-iters", "disc_iters_per_gen", 5, "critic steps per generator step");
  tr.ov.add<int>(s_train, "--batch", "batch", 256, "batch size");
  tr.ov.add<double>(s_train, "--lr", "lr", 1e-4, "learning rate");
  tr.ov.add<double>(s_train, "--gp-lambda", "gp_lambda", 10.0, "gradient penalty weight");
  tr.ov.add<std::uint64_t>(s_train, "--seed", "seed", 0, "seed");
  tr.ov.add<int>(s_train, "--hidden", "hidden", 512, "hidden width");
  tr.ov.add<int>(s_train, "--depth", "depth", 3, "hidden layers");
  tr.ov.add<int>(s_train, "--epochs", "epochs", 20, "VAE epochs");
  tr.ov.add<std::int64_t>(s_train, "--iters", "iters", 10000, "corrector iterations");
  tr.ov.add<double>(s_train, "--sgd-lr", "sgd_lr", 1e-4, "corrector SGD learning rate");
  tr.ov.add<double>(s_train, "--momentum", "momentum", 0.9, "corrector SGD momentum");
  add_threads(s_train);

  RefineArgs rf;
  auto* s_ref = app.add_subcommand("refine", "refine generated samples");
  s_ref->add_option("--gen", rf.gen, "generator or VAE checkpoint");
  s_ref->add_option("--disc", rf.disc, "discriminator checkpoint (repeat to stack)");
  s_ref->add_option("--samples", rf.samples, "data-space input samples CSV");
  s_ref->add_option("--config", rf.config, "JSON config; flags override its keys");
  s_ref->add_option("--out-dir", rf.out_dir, "output directory")->required();
  rf.ov.add<std::string>(s_ref, "--method", "method", "dgflow", "dgflow, ddls or dot");
  rf.ov.add<std::size_t>(s_ref, "--n", "n", 5000, "number of samples");
  rf.ov.add<std::uint64_t>(s_ref, "--sample-seed", "sample_seed", 0, "latent seed");
  rf.ov.add<std::uint64_t>(s_ref, "--seed", "seed", 0, "noise seed");
  rf.ov.add<double>(s_ref, "--eta", "eta", 0.01, "dgflow step size");
  rf.ov.add<std::int64_t>(s_ref, "--steps", "steps", 100, "steps (ddls default 50)");
  rf.ov.add<double>(s_ref, "--gamma", "gamma", 0.01, "dgflow entropy weight");
  rf.ov.add<std::string>(s_ref, "--divergence", "divergence", "kl", "kl, js or logd");
  rf.ov.add<std::string>(s_ref, "--space", "space", "latent", "latent or data");
  rf.ov.add<std::int64_t>(s_ref, "--snapshot-every", "snapshot_every", 5, "0 disables");
  rf.ov.add<double>(s_ref, "--step-size", "step_size", 0.01, "ddls step size");
  rf.ov.add<double>(s_ref, "--noise-scale", "noise_scale", 0.1, "ddls noise scale");
  rf.ov.add<double>(s_ref, "--lr", "lr", 0.01, "dot Adam learning rate");
  rf.ov.add<double>(s_ref, "--lambda-prox", "lambda_prox", 0.5, "dot proximal weight");
  add_threads(s_ref);

  EvalArgs ev;
  auto* s_eval = app.add_subcommand("eval", "score samples (%HQ and KDE)");
  s_eval->add_option("--samples", ev.samples, "samples CSV")->required();
  s_eval->add_option("--reference", ev.reference, "held-out real samples CSV")->required();
  s_eval->add_option("--runs", ev.runs, "runs")->capture_default_str();
  s_eval->add_option("--per-run", ev.per_run, "samples per run")->capture_default_str();
  s_eval->add_option("--out", ev.out, "metric JSON")->required();
  add_threads(s_eval);

  CompareArgs cp;
  auto* s_cmp = app.add_subcommand("compare", "base vs DOT vs DDLS vs DGflow table");
  s_cmp->add_option("--data", cp.data, "training CSV (when training)");
  s_cmp->add_option("--reference", cp.reference, "held-out real samples CSV")->required();
  s_cmp->add_option("--gen", cp.gen, "trained generator checkpoint");
  s_cmp->add_option("--disc", cp.disc, "trained discriminator checkpoint");
  s_cmp->add_option("--config", cp.config, "JSON config; flags override its keys");
  s_cmp->add_option("--out-dir", cp.out_dir, "output directory")->required();
  cp.ov.add<std::size_t>(s_cmp, "--n", "n", 50000, "samples per method");
  cp.ov.add<int>(s_cmp, "--runs", "runs", 10, "metric runs");
  cp.ov.add<int>(s_cmp, "--per-run", "per_run", 5000, "samples per run");
  cp.ov.add<std::uint64_t>(s_cmp, "--seed", "seed", 0, "latent and noise seed");
  cp.ov.add<double>(s_cmp, "--eta", "eta", 0.01, "dgflow step size");
  cp.ov.add<std::int64_t>(s_cmp, "--flow-steps", "flow_steps", 100, "dgflow steps");
  cp.ov.add<double>(s_cmp, "--gamma", "gamma", 0.01, "dgflow entropy weight");
  cp.ov.add<std::int64_t>(s_cmp, "--gen-iters", "gen_iters", 10000, "GAN iterations when training");
  cp.ov.add<int>(s_cmp, "--hidden", "hidden", 512, "GAN width when training");
  cp.ov.add<double>(s_cmp, "--gp-lambda", "gp_lambda", 10.0, "GAN penalty weight when training");
  cp.ov.add<std::uint64_t>(s_cmp, "--train-seed", "train_seed", 0, "GAN seed when training");
  add_threads(s_cmp);

  OracleArgs orc;
  auto* s_orc = app.add_subcommand("oracle", "check particle simulation against PDE oracles");
  s_orc->add_option("--config", orc.config, "JSON config; flags override its keys");
  s_orc->add_option("--out-dir", orc.out_dir, "output directory")->required();
  orc.ov.add<std::string>(s_orc, "--case", "case", "gaussian", "gaussian or bimodal");
  orc.ov.add<std::string>(s_orc, "--div", "div", "kl", "kl, js or logd");
  orc.ov.add<double>(s_orc, "--gamma", "gamma", 0.0, "entropy weight");
  orc.ov.add<std::size_t>(s_orc, "--particles", "particles", 10000, "particles");
  orc.ov.add<double>(s_orc, "--eta", "eta", 1e-3, "particle step");
  orc.ov.add<double>(s_orc, "--t-end", "t_end", 1.0, "bimodal end time");
  orc.ov.add<std::size_t>(s_orc, "--cells", "cells", 1200, "grid cells");
  orc.ov.add<std::uint64_t>(s_orc, "--seed", "seed", 1, "seed");
  add_threads(s_orc);

  FieldArgs fd;
  auto* s_fld = app.add_subcommand("field", "drift vectors of the flow on a grid");
  s_fld->add_option("--disc", fd.disc, "discriminator checkpoint (repeat to stack)")->required();
  s_fld->add_option("--divergence", fd.divergence, "kl, js or logd")->capture_default_str();
  s_fld->add_option("--grid", fd.grid, "points per axis")->capture_default_str();
  s_fld->add_option("--bounds", fd.bounds, "x0 x1 y0 y1")->expected(4);
  s_fld->add_option("--out", fd.out, "CSV x0,x1,v0,v1")->required();
  s_fld->add_option("--svg", fd.svg_out, "optional arrow plot");
  add_threads(s_fld);

  std::string manifest_path;
  auto* s_ver = app.add_subcommand("verify-manifest", "re-hash the files listed in a manifest");
  s_ver->add_option("manifest", manifest_path, "manifest JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*s_gen) cmd_gen_data(gd, common);
    else if (*s_train) cmd_train(tr, common);
    else if (*s_ref) cmd_refine(rf, common);
    else if (*s_eval) cmd_eval(ev, common);
    else if (*s_cmp) cmd_compare(cp, common);
    else if (*s_orc) return cmd_oracle(orc, common);
    else if (*s_fld) cmd_field(fd, common);
    else if (*s_ver) return cmd_verify(manifest_path);
    return 0;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return kExitNumeric;
  } catch (const VerificationError& e) {
    std::fprintf(stderr, "verification failed: %s\n", e.what());
    return kExitVerification;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return kExitConfig;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitConfig;
  } catch (const CheckpointError& e) {
    std::fprintf(stderr, "checkpoint error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
