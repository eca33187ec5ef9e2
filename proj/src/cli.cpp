#include "unrisk/cli.hpp"

#include "unrisk/data.hpp"
#include "unrisk/eval.hpp"
#include "unrisk/hmm.hpp"
#include "unrisk/learning.hpp"
#include "unrisk/risk.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <atomic>
#include <functional>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <thread>

namespace unrisk::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_manifest(const fs::path& out_dir, const std::string& command, const json& resolved) {
  json manifest;
  manifest["command"] = command;
  manifest["version"] = kVersion;
  manifest["config"] = resolved;
  std::ofstream f(out_dir / "manifest.json");
  if (!f) throw InputError("cannot write manifest in " + out_dir.string());
  f << manifest.dump(2) << "\n";
}

void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream f(path);
  if (!f) throw InputError("cannot write " + path.string());
  for (std::size_t i = 0; i < header.size(); ++i) f << (i ? "," : "") << header[i];
  f << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) f << (i ? "," : "") << row[i];
    f << "\n";
  }
}

// bounded worker pool over independent jobs; results land by index
void run_parallel(int jobs, std::size_t count, const std::function<void(std::size_t)>& work) {
  jobs = std::max(1, jobs);
  if (jobs == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) work(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  const int n = std::min<std::size_t>(jobs, count);
  for (int w = 0; w < n; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) break;
        try {
          work(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<std::uint64_t> seeds_from(const json& config) {
  std::vector<std::uint64_t> seeds;
  for (const auto& s : config.at("seeds")) seeds.push_back(s.get<std::uint64_t>());
  if (seeds.empty()) throw InputError("config: seeds must be non-empty");
  return seeds;
}

DimConvention convention_from(const json& config) {
  const std::string c = config.value("dim_convention", "divide");
  if (c == "divide") return DimConvention::Divide;
  if (c == "multiply") return DimConvention::Multiply;
  throw InputError("config: dim_convention must be 'divide' or 'multiply'");
}

GeneratorSpec multiview_spec_from(const json& g) {
  GeneratorSpec spec;
  spec.k = g.at("k").get<int>();
  const auto dims = g.at("dims").get<std::vector<int>>();
  if (dims.size() != 3) throw InputError("config: dims must have 3 entries");
  spec.dims = {dims[0], dims[1], dims[2]};
  const auto pi = g.at("pi").get<std::vector<double>>();
  spec.pi = Eigen::Map<const Vec>(pi.data(), static_cast<Eigen::Index>(pi.size()));
  spec.mean_scale = g.value("mean_scale", 1.0);
  spec.noise = g.value("noise", 1.0);
  return spec;
}

HmmGeneratorSpec hmm_spec_from(const json& g) {
  HmmGeneratorSpec spec;
  spec.k = g.at("k").get<int>();
  spec.T = g.at("T").get<int>();
  const auto load_mat = [](const json& rows) {
    const int r = static_cast<int>(rows.size());
    const int c = static_cast<int>(rows[0].size());
    Mat m(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) m(i, j) = rows[i][j].get<double>();
    return m;
  };
  spec.transition = load_mat(g.at("transition"));
  const auto init = g.at("initial").get<std::vector<double>>();
  spec.initial = Eigen::Map<const Vec>(init.data(), static_cast<Eigen::Index>(init.size()));
  const std::string etype = g.value("emission", "finite");
  if (etype == "finite") {
    spec.emission = EmissionType::Finite;
    spec.emission_table = load_mat(g.at("emission_table"));
  } else if (etype == "gaussian") {
    spec.emission = EmissionType::Gaussian;
    spec.emission_means = load_mat(g.at("emission_means"));
    spec.emission_sigma = g.value("emission_sigma", 1.0);
  } else {
    throw InputError("config: emission must be 'finite' or 'gaussian'");
  }
  return spec;
}

struct SynthImageConfig {
  int k = 3, per_class = 40, rows = 8, cols = 8;
  std::uint64_t image_seed = 1;
  double pixel_noise = 0.15;
};

SynthImageConfig synth_config_from(const json& g) {
  SynthImageConfig c;
  c.k = g.value("k", c.k);
  c.per_class = g.value("per_class", c.per_class);
  c.rows = g.value("rows", c.rows);
  c.cols = g.value("cols", c.cols);
  c.image_seed = g.value("image_seed", c.image_seed);
  c.pixel_noise = g.value("pixel_noise", c.pixel_noise);
  return c;
}

ImageSet load_base_images(const json& patchwork) {
  if (patchwork.contains("idx_images")) {
    const fs::path imgs = patchwork.at("idx_images").get<std::string>();
    const fs::path lbls = patchwork.at("idx_labels").get<std::string>();
    if (!fs::exists(imgs)) throw InputError("missing IDX image file: " + imgs.string());
    if (!fs::exists(lbls)) throw InputError("missing IDX label file: " + lbls.string());
    return load_idx(imgs, lbls);
  }
  const SynthImageConfig c = synth_config_from(patchwork.value("synthetic", json::object()));
  return synth_image_classes(c.k, c.per_class, c.rows, c.cols, c.image_seed, c.pixel_noise);
}

// ---------------------------------------------------------------------------
// Patchwork experiment harness shared by estimate-risk and learn: a logistic
// family over the three pixel views, a seed model trained on labeled a = 0
// data, and dimmed test sets per shift value.
// ---------------------------------------------------------------------------

struct PatchworkTask {
  ViewLossModel family;       // zero-parameter logistic family
  MultiViewDataset train;     // a = 0, labeled
  MultiViewDataset validate;  // a = 0, labeled (validation baseline)
  Vec theta0;                 // seed model parameters
};

PatchworkTask make_patchwork_task(const ImageSet& base, const json& config, std::uint64_t seed) {
  const std::size_t m_train = config.value("m_train", 3000);
  const std::size_t m_val = config.value("m_val", 2000);
  const double rho = config.value("train_rho", 10.0);

  PatchworkTask task;
  const MultiViewDataset pool =
      compose_patchwork(base, m_train + m_val, mix_seed(seed, 0x747261696eULL));
  task.train.k = pool.k;
  task.validate.k = pool.k;
  task.train.views = pool.views.slice(0, m_train);
  task.validate.views = pool.views.slice(m_train, m_train + m_val);
  task.train.labels.assign(pool.labels.begin(), pool.labels.begin() + m_train);
  task.validate.labels.assign(pool.labels.begin() + m_train, pool.labels.end());

  const int k = pool.k;
  const std::array<int, 3> dims = {pool.views.dim(0), pool.views.dim(1), pool.views.dim(2)};
  int d = 0;
  for (int v = 0; v < 3; ++v) d += k * dims[v];
  task.family = ViewLossModel::logistic(k, dims, Vec::Zero(d));
  task.theta0 = train_logistic_supervised(task.train, task.family, rho, 1e-7, 5000).theta;
  return task;
}

MultiViewDataset make_shifted_test(const ImageSet& base, double a, DimConvention conv,
                                   std::size_t m, std::uint64_t seed) {
  const ImageSet dimmed = a == 0.0 ? base : apply_dimming(base, a, conv);
  return compose_patchwork(dimmed, m, mix_seed(seed, 0x74657374ULL));
}

}  // namespace

json load_config_file(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open config " + path.string());
  json j;
  f >> j;
  if (j.contains("config") && j.contains("version")) return j.at("config");  // manifest rerun
  return j;
}

// ---------------------------------------------------------------------------
// gen-data
// ---------------------------------------------------------------------------

json run_gen_data(const json& config, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  const std::string type = config.at("type").get<std::string>();
  const std::string prefix = config.value("out_prefix", "data");
  const std::size_t m = config.at("m").get<std::size_t>();
  const std::vector<std::uint64_t> seeds = seeds_from(config);

  json written = json::array();
  if (type == "multiview") {
    const GeneratorSpec spec = multiview_spec_from(config.at("multiview"));
    for (const auto seed : seeds) {
      const fs::path path = out_dir / (prefix + "_seed" + std::to_string(seed) + ".mvd");
      gen_multiview(spec, m, seed).save(path);
      written.push_back(path.string());
    }
  } else if (type == "patchwork") {
    const json& pw = config.at("patchwork");
    const ImageSet base = load_base_images(pw);
    const DimConvention conv = convention_from(config);
    const std::vector<double> a_list = pw.value("a_list", std::vector<double>{0.0});
    for (const double a : a_list) {
      const ImageSet dimmed = a == 0.0 ? base : apply_dimming(base, a, conv);
      for (const auto seed : seeds) {
        const fs::path path = out_dir / (prefix + "_a" + fmt17(a) + "_seed" +
                                         std::to_string(seed) + ".mvd");
        compose_patchwork(dimmed, m, seed).save(path);
        written.push_back(path.string());
      }
    }
  } else if (type == "hmm") {
    const HmmGeneratorSpec spec = hmm_spec_from(config.at("hmm"));
    for (const auto seed : seeds) {
      const fs::path path = out_dir / (prefix + "_seed" + std::to_string(seed) + ".useq");
      gen_hmm_sequences(spec, m, seed).save(path);
      written.push_back(path.string());
    }
  } else {
    throw InputError("gen-data: unknown type '" + type + "'");
  }

  write_manifest(out_dir, "gen-data", config);
  json summary;
  summary["written"] = written;
  return summary;
}

// ---------------------------------------------------------------------------
// estimate-risk
// ---------------------------------------------------------------------------

namespace {

// file-driven variant: a fixed model evaluated on dataset files
json run_estimate_risk_files(const json& config, const fs::path& out_dir) {
  const fs::path model_path = config.at("model_path").get<std::string>();
  if (!fs::exists(model_path)) throw InputError("missing model file: " + model_path.string());
  const ViewLossModel model = ViewLossModel::from_json(load_config_file(model_path));
  json dc_json = config.value("decomposition", json::object());
  if (!dc_json.contains("augment_constant")) dc_json["augment_constant"] = true;
  const DecompositionConfig dc = DecompositionConfig::from_json(dc_json);

  std::optional<double> validation;
  if (config.contains("validation_path")) {
    const MultiViewDataset val =
        MultiViewDataset::load(config.at("validation_path").get<std::string>());
    validation = labeled_risk(val, model);
  }

  std::vector<std::vector<std::string>> csv;
  for (const json& entry : config.at("datasets")) {
    const fs::path path = entry.at("path").get<std::string>();
    if (!fs::exists(path)) throw InputError("missing dataset file: " + path.string());
    const MultiViewDataset data = MultiViewDataset::load(path);
    const double a = entry.value("a", 0.0);
    const std::uint64_t seed = entry.value("seed", 0);
    DecompositionConfig dcs = dc;
    dcs.seed = mix_seed(dc.seed, seed);
    const RiskEstimate est = estimate_risk(data.unlabeled(), model, dcs);
    csv.push_back({fmt17(a), std::to_string(seed), fmt17(est.value),
                   data.labeled() ? fmt17(labeled_risk(data, model)) : "",
                   validation ? fmt17(*validation) : "",
                   fmt17(est.entropy_baseline.value_or(std::numeric_limits<double>::quiet_NaN())),
                   fmt17(est.plugin.lambda_min), fmt17(est.plugin.pi_min)});
  }
  write_csv(out_dir / "estimate_risk.csv",
            {"a", "seed", "R_hat", "R_labeled_oracle", "validation_baseline", "entropy_baseline",
             "lambda", "pi_min"},
            csv);
  write_manifest(out_dir, "estimate-risk", config);
  json summary;
  summary["rows"] = csv.size();
  summary["csv"] = (out_dir / "estimate_risk.csv").string();
  return summary;
}

}  // namespace

json run_estimate_risk(const json& config, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  if (config.contains("datasets")) return run_estimate_risk_files(config, out_dir);
  const std::vector<std::uint64_t> seeds = seeds_from(config);
  const std::vector<double> a_list = config.value("a_list", std::vector<double>{0.0});
  const std::size_t m = config.value("m", 10000);
  const int jobs = config.value("jobs", 1);
  const DimConvention conv = convention_from(config);
  json dc_json = config.value("decomposition", json::object());
  // trained softmax scores need the affine lift (exact zero-sum constraint)
  if (!dc_json.contains("augment_constant")) dc_json["augment_constant"] = true;
  DecompositionConfig dc = DecompositionConfig::from_json(dc_json);

  const ImageSet base = load_base_images(config.value("patchwork", json::object()));

  struct Row {
    double a;
    std::uint64_t seed;
    double r_hat, r_oracle, validation, entropy, lambda, pi_min;
    bool has_oracle;
  };
  std::vector<Row> rows(a_list.size() * seeds.size());

  run_parallel(jobs, rows.size(), [&](std::size_t idx) {
    const double a = a_list[idx / seeds.size()];
    const std::uint64_t seed = seeds[idx % seeds.size()];
    const PatchworkTask task = make_patchwork_task(base, config, seed);
    const ViewLossModel model = task.family.with_theta(task.theta0);
    const MultiViewDataset test = make_shifted_test(base, a, conv, m, seed);

    DecompositionConfig dcs = dc;
    dcs.seed = mix_seed(dc.seed, seed * 1000003ULL + idx);
    const RiskEstimate est = estimate_risk(test.unlabeled(), model, dcs);

    Row row;
    row.a = a;
    row.seed = seed;
    row.r_hat = est.value;
    row.has_oracle = test.labeled();
    row.r_oracle = test.labeled() ? labeled_risk(test, model)
                                  : std::numeric_limits<double>::quiet_NaN();
    row.validation = labeled_risk(task.validate, model);
    row.entropy = est.entropy_baseline.value_or(std::numeric_limits<double>::quiet_NaN());
    row.lambda = est.plugin.lambda_min;
    row.pi_min = est.plugin.pi_min;
    rows[idx] = row;
  });

  std::vector<std::vector<std::string>> csv;
  for (const Row& r : rows)
    csv.push_back({fmt17(r.a), std::to_string(r.seed), fmt17(r.r_hat),
                   r.has_oracle ? fmt17(r.r_oracle) : "", fmt17(r.validation), fmt17(r.entropy),
                   fmt17(r.lambda), fmt17(r.pi_min)});
  write_csv(out_dir / "estimate_risk.csv",
            {"a", "seed", "R_hat", "R_labeled_oracle", "validation_baseline", "entropy_baseline",
             "lambda", "pi_min"},
            csv);
  write_manifest(out_dir, "estimate-risk", config);

  json summary;
  summary["rows"] = csv.size();
  summary["csv"] = (out_dir / "estimate_risk.csv").string();
  return summary;
}

// ---------------------------------------------------------------------------
// learn
// ---------------------------------------------------------------------------

json run_learn(const json& config, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  const std::vector<std::uint64_t> seeds = seeds_from(config);
  const std::vector<double> a_list = config.value("a_list", std::vector<double>{0.0});
  const std::size_t m = config.value("m", 10000);
  const int jobs = config.value("jobs", 1);
  const DimConvention conv = convention_from(config);
  json dc_json = config.value("decomposition", json::object());
  if (!dc_json.contains("refine")) dc_json["refine"] = false;  // plug-in is enough here
  DecompositionConfig dc = DecompositionConfig::from_json(dc_json);
  LearnConfig lc = LearnConfig::from_json(config.value("learn", json::object()));
  const std::string method = config.value("method", "logistic");
  if (method != "logistic" && method != "general")
    throw InputError("learn: method must be 'logistic' or 'general'");

  const ImageSet base = load_base_images(config.value("patchwork", json::object()));

  struct Row {
    double a;
    std::uint64_t seed;
    double risk_seed, risk_adapted, risk_oracle;
  };
  std::vector<Row> rows(a_list.size() * seeds.size());
  std::mutex log_mutex;
  json step_logs = json::array();

  run_parallel(jobs, rows.size(), [&](std::size_t idx) {
    const double a = a_list[idx / seeds.size()];
    const std::uint64_t seed = seeds[idx % seeds.size()];
    const PatchworkTask task = make_patchwork_task(base, config, seed);
    const MultiViewDataset test = make_shifted_test(base, a, conv, m, seed);

    DecompositionConfig dcs = dc;
    dcs.seed = mix_seed(dc.seed, seed * 7919ULL + idx);
    LearnConfig lcs = lc;
    lcs.seed = mix_seed(lc.seed, seed);

    LearnResult adapted;
    if (method == "logistic") {
      adapted = learn_logistic(test.unlabeled(), task.family, task.theta0, lcs, dcs);
    } else {
      adapted = learn_general(test.unlabeled(), task.family, task.theta0, lcs, dcs);
    }
    // oracle comparator: constrained fit on the labeled shifted data
    const Vec oracle_theta =
        train_logistic_supervised(test, task.family, lcs.rho, 1e-7, 5000).theta;

    Row row;
    row.a = a;
    row.seed = seed;
    row.risk_seed = labeled_risk(test, task.family.with_theta(task.theta0));
    row.risk_adapted = labeled_risk(test, task.family.with_theta(adapted.theta));
    row.risk_oracle = labeled_risk(test, task.family.with_theta(oracle_theta));
    rows[idx] = row;

    json steps = json::array();
    for (const StepLog& s : adapted.log) {
      json entry = {{"t", s.t}, {"grad_norm", s.grad_norm}, {"skipped", s.skipped}};
      if (std::isfinite(s.estimated_risk)) entry["estimated_risk"] = s.estimated_risk;
      steps.push_back(entry);
    }
    std::lock_guard<std::mutex> lock(log_mutex);
    step_logs.push_back({{"a", a}, {"seed", seed}, {"steps", steps}});
  });

  std::vector<std::vector<std::string>> csv;
  for (const Row& r : rows)
    csv.push_back({fmt17(r.a), std::to_string(r.seed), fmt17(r.risk_seed),
                   fmt17(r.risk_adapted), fmt17(r.risk_oracle)});
  write_csv(out_dir / "learn.csv",
            {"a", "seed", "risk_theta0", "risk_adapted", "risk_oracle_trained"}, csv);
  {
    // per-step JSON lines for the learning runs
    std::ofstream f(out_dir / "learn_steps.jsonl");
    for (const auto& entry : step_logs) f << entry.dump() << "\n";
  }
  write_manifest(out_dir, "learn", config);

  json summary;
  summary["rows"] = csv.size();
  summary["csv"] = (out_dir / "learn.csv").string();
  return summary;
}

// ---------------------------------------------------------------------------
// hmm-risk
// ---------------------------------------------------------------------------

json run_hmm_risk(const json& config, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  DecompositionConfig dc =
      DecompositionConfig::from_json(config.value("decomposition", json::object()));
  const HmmGeneratorSpec spec = hmm_spec_from(config.at("hmm"));

  struct Result {
    std::uint64_t seed;
    HmmRiskResult res;
    double oracle = std::numeric_limits<double>::quiet_NaN();
  };
  std::vector<Result> results;

  if (config.contains("dataset_path")) {
    const fs::path path = config.at("dataset_path").get<std::string>();
    if (!fs::exists(path)) throw InputError("missing sequence dataset: " + path.string());
    const SequenceDataset data = SequenceDataset::load(path);
    const HmmModel hmm = HmmModel::from_generator(spec);
    results.resize(1);
    results[0].seed = 0;
    results[0].res = hmm_risk(hmm, data.obs, dc);
    if (!data.labels.empty()) results[0].oracle = hmm_labeled_inner_risk(hmm, data);
  } else {
    const std::vector<std::uint64_t> seeds = seeds_from(config);
    const std::size_t m = config.value("m", 5000);
    const int jobs = config.value("jobs", 1);
    results.resize(seeds.size());
    run_parallel(jobs, seeds.size(), [&](std::size_t idx) {
      const std::uint64_t seed = seeds[idx];
      const SequenceDataset data = gen_hmm_sequences(spec, m, seed);
      const HmmModel hmm = HmmModel::from_generator(spec);
      DecompositionConfig dcs = dc;
      dcs.seed = mix_seed(dc.seed, seed);
      results[idx].seed = seed;
      results[idx].res = hmm_risk(hmm, data.obs, dcs);
      results[idx].oracle = hmm_labeled_inner_risk(hmm, data);
    });
  }

  std::vector<std::vector<std::string>> csv;
  for (const Result& r : results) {
    for (const PositionTerm& t : r.res.pair_terms)
      csv.push_back({std::to_string(r.seed), "pair", std::to_string(t.t), fmt17(t.value),
                     fmt17(t.lambda), t.degenerate ? "1" : "0"});
    for (const PositionTerm& t : r.res.unary_terms)
      csv.push_back({std::to_string(r.seed), "unary", std::to_string(t.t), fmt17(t.value),
                     fmt17(t.lambda), t.degenerate ? "1" : "0"});
    csv.push_back({std::to_string(r.seed), "total_inner", "", fmt17(r.res.inner_risk), "", ""});
    if (std::isfinite(r.oracle))
      csv.push_back({std::to_string(r.seed), "oracle_inner", "", fmt17(r.oracle), "", ""});
  }
  write_csv(out_dir / "hmm_risk.csv", {"seed", "kind", "t", "value", "lambda", "degenerate"},
            csv);
  write_manifest(out_dir, "hmm-risk", config);

  json summary;
  summary["rows"] = csv.size();
  summary["csv"] = (out_dir / "hmm_risk.csv").string();
  return summary;
}

// ---------------------------------------------------------------------------
// command line
// ---------------------------------------------------------------------------

int main(int argc, const char* const* argv) {
  CLI::App app{"unsupervised risk estimation via loss-moment tensor decomposition"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".", seeds_override, dim_override;
  int jobs_override = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config (a manifest.json also works)")
        ->required();
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--seeds", seeds_override, "comma-separated seed list override");
    cmd->add_option("--jobs", jobs_override, "worker pool size override");
    cmd->add_option("--dim-convention", dim_override, "divide|multiply override");
  };

  CLI::App* gen = app.add_subcommand("gen-data", "write dataset files from a generator spec");
  CLI::App* est = app.add_subcommand("estimate-risk", "risk-estimation sweep over shifts");
  CLI::App* lrn = app.add_subcommand("learn", "unsupervised adaptation from a seed model");
  CLI::App* hmm = app.add_subcommand("hmm-risk", "per-position HMM risk estimation");
  for (CLI::App* cmd : {gen, est, lrn, hmm}) add_common(cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    json config = load_config_file(config_path);
    if (!seeds_override.empty()) {
      json seeds = json::array();
      std::size_t pos = 0;
      std::string rest = seeds_override;
      while (!rest.empty()) {
        pos = rest.find(',');
        seeds.push_back(std::stoull(rest.substr(0, pos)));
        if (pos == std::string::npos) break;
        rest = rest.substr(pos + 1);
      }
      config["seeds"] = seeds;
    }
    if (jobs_override > 0) config["jobs"] = jobs_override;
    if (!dim_override.empty()) config["dim_convention"] = dim_override;

    json summary;
    if (gen->parsed()) summary = run_gen_data(config, out_dir);
    if (est->parsed()) summary = run_estimate_risk(config, out_dir);
    if (lrn->parsed()) summary = run_learn(config, out_dir);
    if (hmm->parsed()) summary = run_hmm_risk(config, out_dir);
    std::fputs((summary.dump(2) + "\n").c_str(), stdout);
    return 0;
  } catch (const InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 2;
  }
}

}  // namespace unrisk::cli
