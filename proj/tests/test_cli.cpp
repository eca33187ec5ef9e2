#include "unrisk/cli.hpp"

#include "unrisk/data.hpp"
#include "unrisk/models.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>

using namespace unrisk;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

json small_patchwork_config() {
  json cfg;
  cfg["seeds"] = {1, 2};
  cfg["a_list"] = {0.0, 5.0};
  cfg["m"] = 600;
  cfg["m_train"] = 600;
  cfg["m_val"] = 300;
  cfg["patchwork"] = {{"synthetic", {{"k", 2}, {"per_class", 12}, {"rows", 5}, {"cols", 5},
                                     {"image_seed", 4}}}};
  cfg["decomposition"] = {{"seed", 7}};
  return cfg;
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("gen-data") {
  SUBCASE("same seed runs are hash-equal") {
    TempDir out1("unrisk_cli_gen1"), out2("unrisk_cli_gen2");
    json cfg;
    cfg["type"] = "multiview";
    cfg["m"] = 50;
    cfg["seeds"] = {3};
    cfg["multiview"] = {{"k", 2}, {"dims", {2, 2, 2}}, {"pi", {0.5, 0.5}}};
    cli::run_gen_data(cfg, out1.path);
    cli::run_gen_data(cfg, out2.path);
    CHECK(slurp(out1.path / "data_seed3.mvd") == slurp(out2.path / "data_seed3.mvd"));
  }
  SUBCASE("patchwork sweep writes one file per (a, seed) plus a manifest") {
    TempDir out("unrisk_cli_gen3");
    json cfg;
    cfg["type"] = "patchwork";
    cfg["m"] = 20;
    cfg["seeds"] = {1};
    cfg["patchwork"] = {{"a_list", {0.0, 5.0}},
                        {"synthetic", {{"k", 2}, {"per_class", 5}, {"rows", 4}, {"cols", 4}}}};
    const json summary = cli::run_gen_data(cfg, out.path);
    CHECK(summary.at("written").size() == 2);
    CHECK(fs::exists(out.path / "manifest.json"));
  }
  SUBCASE("missing IDX source path fails cleanly") {
    TempDir out("unrisk_cli_gen4");
    json cfg;
    cfg["type"] = "patchwork";
    cfg["m"] = 5;
    cfg["seeds"] = {1};
    cfg["patchwork"] = {{"idx_images", "/nonexistent/images.idx"},
                        {"idx_labels", "/nonexistent/labels.idx"}};
    CHECK_THROWS_AS(cli::run_gen_data(cfg, out.path), InputError);
  }
}

TEST_CASE("estimate-risk sweep is reproducible bit-for-bit from its manifest") {
  TempDir out1("unrisk_cli_est1"), out2("unrisk_cli_est2");
  const json cfg = small_patchwork_config();
  cli::run_estimate_risk(cfg, out1.path);
  // rerun from the manifest (wrapped config)
  const json manifest_cfg = cli::load_config_file(out1.path / "manifest.json");
  cli::run_estimate_risk(manifest_cfg, out2.path);
  const std::string csv1 = slurp(out1.path / "estimate_risk.csv");
  CHECK(csv1 == slurp(out2.path / "estimate_risk.csv"));
  CHECK(csv1.find("a,seed,R_hat") == 0);
  // one row per (a, seed)
  CHECK(std::count(csv1.begin(), csv1.end(), '\n') == 5);
}

TEST_CASE("estimate-risk over dataset files") {
  TempDir out("unrisk_cli_files");
  // a small generator task whose model we serialize
  GeneratorSpec spec;
  spec.k = 2;
  spec.dims = {2, 2, 2};
  spec.pi = Vec::Constant(2, 0.5);
  spec.noise = 0.5;
  const MultiViewDataset labeled = gen_multiview(spec, 1500, 11);
  MultiViewDataset unlabeled = labeled;
  unlabeled.labels.clear();

  const fs::path labeled_path = out.path / "labeled.mvd";
  const fs::path unlabeled_path = out.path / "unlabeled.mvd";
  labeled.save(labeled_path);
  unlabeled.save(unlabeled_path);

  const std::array<Mat, 3> mu = generator_means(spec, 11);
  Vec theta = Vec::Zero(12);
  for (int v = 0; v < 3; ++v)
    for (int j = 0; j < 2; ++j)
      theta.segment(v * 4 + j * 2, 2) = 1.5 * pseudo_inverse(mu[v]).transpose().row(j).transpose();
  const auto model = ViewLossModel::logistic(2, spec.dims, theta);
  const fs::path model_path = out.path / "model.json";
  std::ofstream(model_path) << model.to_json().dump();

  json cfg;
  cfg["model_path"] = model_path.string();
  cfg["datasets"] = {{{"path", labeled_path.string()}, {"a", 0.0}, {"seed", 1}},
                     {{"path", unlabeled_path.string()}, {"a", 0.0}, {"seed", 2}}};
  cfg["decomposition"] = {{"seed", 5}, {"augment_constant", false}};
  cli::run_estimate_risk(cfg, out.path);

  std::ifstream csv(out.path / "estimate_risk.csv");
  std::string header, row_labeled, row_unlabeled;
  std::getline(csv, header);
  std::getline(csv, row_labeled);
  std::getline(csv, row_unlabeled);
  // labeled file fills the oracle column, unlabeled leaves it empty
  auto nth_field = [](const std::string& row, int n) {
    std::size_t start = 0;
    for (int i = 0; i < n; ++i) start = row.find(',', start) + 1;
    return row.substr(start, row.find(',', start) - start);
  };
  CHECK(nth_field(row_unlabeled, 3).empty());
  CHECK_FALSE(nth_field(row_labeled, 3).empty());
}

TEST_CASE("hmm-risk CSV has the junction-tree row counts") {
  TempDir out("unrisk_cli_hmm");
  json cfg;
  cfg["seeds"] = {4};
  cfg["m"] = 400;
  cfg["hmm"] = {{"k", 2},
                {"T", 6},
                {"transition", {{0.8, 0.2}, {0.3, 0.7}}},
                {"initial", {0.5, 0.5}},
                {"emission", "finite"},
                {"emission_table", {{0.8, 0.1, 0.1}, {0.1, 0.1, 0.8}}}};
  cli::run_hmm_risk(cfg, out.path);
  std::ifstream csv(out.path / "hmm_risk.csv");
  std::string line;
  int pair_rows = 0, unary_rows = 0, totals = 0;
  while (std::getline(csv, line)) {
    if (line.find(",pair,") != std::string::npos) ++pair_rows;
    if (line.find(",unary,") != std::string::npos) ++unary_rows;
    if (line.find(",total_inner,") != std::string::npos) ++totals;
  }
  CHECK(pair_rows == 6 - 3);   // T - 3
  CHECK(unary_rows == 6 - 4);  // T - 4
  CHECK(totals == 1);
}

TEST_CASE("binary exit codes") {
  const char* bad_usage[] = {"unrisk", "estimate-risk"};
  CHECK(cli::main(2, bad_usage) == 1);  // missing --config

  TempDir out("unrisk_cli_exit");
  const fs::path cfg_path = out.path / "cfg.json";
  {
    json cfg;
    cfg["type"] = "bogus";
    cfg["m"] = 1;
    cfg["seeds"] = {1};
    std::ofstream(cfg_path) << cfg.dump();
  }
  const std::string cfg_str = cfg_path.string();
  const std::string out_str = out.path.string();
  const char* bad_type[] = {"unrisk", "gen-data", "--config", cfg_str.c_str(), "--out",
                            out_str.c_str()};
  CHECK(cli::main(6, bad_type) == 1);

  // numerical failure exits with 2: a constant-loss model has rank-1 pair
  // moments, which the decomposition rejects
  GeneratorSpec spec;
  spec.k = 2;
  spec.dims = {1, 1, 1};
  spec.pi = Vec::Constant(2, 0.5);
  const MultiViewDataset data = gen_multiview(spec, 200, 5);
  const fs::path data_path = out.path / "flat.mvd";
  data.save(data_path);
  const auto model = ViewLossModel::logistic(2, {1, 1, 1}, Vec::Zero(6));
  const fs::path model_path = out.path / "flat_model.json";
  std::ofstream(model_path) << model.to_json().dump();
  const fs::path cfg2_path = out.path / "cfg2.json";
  {
    json cfg;
    cfg["model_path"] = model_path.string();
    cfg["datasets"] = {{{"path", data_path.string()}}};
    cfg["decomposition"] = {{"augment_constant", false}};
    std::ofstream(cfg2_path) << cfg.dump();
  }
  const std::string cfg2_str = cfg2_path.string();
  const char* numerical[] = {"unrisk", "estimate-risk", "--config", cfg2_str.c_str(),
                             "--out", out_str.c_str()};
  CHECK(cli::main(6, numerical) == 2);
}

TEST_SUITE_END();
