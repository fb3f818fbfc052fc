#include "ldm/pipeline.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "ldm/errors.hpp"
#include "ldm/matrix_io.hpp"

namespace ldm {

using nlohmann::json;

std::vector<Eigen::MatrixXd> CompressedLibrary::w_blocks() const {
  std::vector<Eigen::MatrixXd> blocks;
  blocks.reserve(factors.size());
  for (const auto& f : factors) blocks.push_back(f.w);
  return blocks;
}

namespace {

// Priors and DCE models are pure functions of (dictionary, partition, factors);
// build and load share this step so a reloaded bundle behaves bit-identically.
void finalize_library(CompressedLibrary& lib) {
  const int K = lib.clusters();
  lib.priors.clear();
  lib.cluster_dce.clear();
  lib.priors.reserve(static_cast<std::size_t>(K));
  lib.cluster_dce.reserve(static_cast<std::size_t>(K));

  Eigen::MatrixXd all_residuals(lib.dict.dim(), lib.dict.size());
  for (int j = 0; j < K; ++j) {
    const Eigen::MatrixXd block = lib.block(j);
    const Eigen::MatrixXd residuals =
        compression_error_samples(block, lib.factors[static_cast<std::size_t>(j)]);
    all_residuals.middleCols(lib.partition.begin(j), lib.partition.block_size(j)) =
        residuals;
    lib.priors.push_back(structural_covariance(
        lib.factors[static_cast<std::size_t>(j)].h, lib.config.prior_epsilon));
    lib.cluster_dce.push_back(fit_dce(residuals, lib.config.dce_epsilon));
  }
  lib.combined_dce = fit_dce(all_residuals, lib.config.dce_epsilon);
}

json rank_rule_to_json(const RankRule& r) {
  return json{{"k_max", r.k_max}, {"delta", r.delta}};
}

RankRule rank_rule_from_json(const json& j) {
  return RankRule{j.at("k_max").get<int>(), j.at("delta").get<double>()};
}

json compression_to_json(const ClusterCompressionConfig& c) {
  json j;
  j["method"] = c.method == CompressionMethod::Pca ? "pca" : "nmf";
  j["rank_rule"] = rank_rule_to_json(c.rule);
  j["nmf"] = json{{"nonneg_w", c.nmf.nonneg_w},
                  {"eta_h", c.nmf.eta_h},
                  {"eta_w", c.nmf.eta_w},
                  {"max_outer", c.nmf.max_outer},
                  {"seed", c.nmf.seed},
                  {"snr", c.nmf.snr},
                  {"inner_max_iters", c.nmf.inner_max_iters},
                  {"inner_tol", c.nmf.inner_tol},
                  {"outer_tol", c.nmf.outer_tol}};
  return j;
}

ClusterCompressionConfig compression_from_json(const json& j) {
  ClusterCompressionConfig c;
  const std::string method = j.at("method").get<std::string>();
  if (method == "pca")
    c.method = CompressionMethod::Pca;
  else if (method == "nmf")
    c.method = CompressionMethod::Nmf;
  else
    throw ConfigError("library manifest: unknown compression method " + method);
  c.rule = rank_rule_from_json(j.at("rank_rule"));
  const json& nj = j.at("nmf");
  c.nmf.nonneg_w = nj.at("nonneg_w").get<bool>();
  c.nmf.eta_h = nj.at("eta_h").get<double>();
  c.nmf.eta_w = nj.at("eta_w").get<double>();
  c.nmf.max_outer = nj.at("max_outer").get<int>();
  c.nmf.seed = nj.at("seed").get<std::uint64_t>();
  c.nmf.snr = nj.at("snr").get<double>();
  c.nmf.inner_max_iters = nj.at("inner_max_iters").get<int>();
  c.nmf.inner_tol = nj.at("inner_tol").get<double>();
  c.nmf.outer_tol = nj.at("outer_tol").get<double>();
  return c;
}

std::string cluster_file(int j, const char* suffix) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "cluster_%03d_%s.bin", j, suffix);
  return buf;
}

}  // namespace

CompressedLibrary build_library(const Dictionary& d, const LibraryConfig& cfg) {
  Dictionary labeled = d;
  if (!labeled.has_labels()) {
    if (!cfg.clustering)
      throw ConfigError("build_library: unlabeled dictionary needs a clustering config");
    labeled.labels = k_medoids(d, *cfg.clustering).labels;
  }
  PartitionedDictionary pd = partition_by_labels(labeled);

  CompressedLibrary lib;
  lib.dict = std::move(pd.dict);
  lib.partition = std::move(pd.partition);
  lib.permutation = std::move(pd.permutation);
  lib.config = cfg;
  lib.factors = compress_partition(lib.dict, lib.partition, cfg.compression);
  finalize_library(lib);
  return lib;
}

void save_library(const CompressedLibrary& lib, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_matrix(lib.dict.atoms, dir / "dictionary.bin", MatrixFormat::RawBinary);
  if (lib.dict.has_labels()) save_labels(lib.dict.labels, dir / "labels.csv");

  json manifest;
  manifest["format"] = "ldm-library";
  manifest["version"] = 1;
  manifest["n"] = lib.dict.dim();
  manifest["p"] = lib.dict.size();
  manifest["clusters"] = lib.clusters();
  manifest["boundaries"] = lib.partition.boundaries;
  manifest["permutation"] = lib.permutation;
  manifest["labels_present"] = lib.dict.has_labels();

  json cfg;
  cfg["dce_epsilon"] = lib.config.dce_epsilon;
  cfg["prior_epsilon"] = lib.config.prior_epsilon;
  if (lib.config.clustering) {
    const auto& cc = *lib.config.clustering;
    cfg["clustering"] = json{{"k", cc.k},
                             {"metric", cc.metric == Metric::L1 ? "l1" : "l2"},
                             {"seed", cc.seed},
                             {"max_iters", cc.max_iters}};
  } else {
    cfg["clustering"] = nullptr;
  }
  cfg["compression"] = json::array();
  for (const auto& c : lib.config.compression)
    cfg["compression"].push_back(compression_to_json(c));
  manifest["config"] = cfg;

  json ranks = json::array();
  for (const auto& f : lib.factors) ranks.push_back(f.rank());
  manifest["ranks"] = ranks;

  for (int j = 0; j < lib.clusters(); ++j) {
    const auto& f = lib.factors[static_cast<std::size_t>(j)];
    save_matrix(f.w, dir / cluster_file(j, "W"), MatrixFormat::RawBinary);
    save_matrix(f.h, dir / cluster_file(j, "H"), MatrixFormat::RawBinary);
    save_matrix(f.singular_values, dir / cluster_file(j, "sv"), MatrixFormat::RawBinary);
  }

  std::ofstream out(dir / "manifest.json");
  if (!out) throw ParseError("cannot write library manifest");
  out << manifest.dump(2) << '\n';
}

CompressedLibrary load_library(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw ParseError("cannot open " + (dir / "manifest.json").string());
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw ParseError("library manifest: " + std::string(e.what()));
  }
  if (manifest.value("format", "") != "ldm-library")
    throw ParseError("not a library bundle: " + dir.string());

  CompressedLibrary lib;
  Eigen::MatrixXd atoms = load_matrix(dir / "dictionary.bin", MatrixFormat::RawBinary);
  std::vector<int> labels;
  if (manifest.at("labels_present").get<bool>())
    labels = load_labels(dir / "labels.csv");
  lib.dict = Dictionary::make(std::move(atoms), std::move(labels));

  lib.partition.boundaries =
      manifest.at("boundaries").get<std::vector<Eigen::Index>>();
  lib.partition.validate();
  lib.permutation = manifest.at("permutation").get<std::vector<Eigen::Index>>();

  const json& cfg = manifest.at("config");
  lib.config.dce_epsilon = cfg.at("dce_epsilon").get<double>();
  lib.config.prior_epsilon = cfg.at("prior_epsilon").get<double>();
  if (!cfg.at("clustering").is_null()) {
    const json& cj = cfg.at("clustering");
    ClusteringConfig cc;
    cc.k = cj.at("k").get<int>();
    cc.metric = cj.at("metric").get<std::string>() == "l1" ? Metric::L1 : Metric::L2;
    cc.seed = cj.at("seed").get<std::uint64_t>();
    cc.max_iters = cj.at("max_iters").get<int>();
    lib.config.clustering = cc;
  }
  lib.config.compression.clear();
  for (const json& c : cfg.at("compression"))
    lib.config.compression.push_back(compression_from_json(c));

  const int K = manifest.at("clusters").get<int>();
  for (int j = 0; j < K; ++j) {
    LowRankFactors f;
    f.w = load_matrix(dir / cluster_file(j, "W"), MatrixFormat::RawBinary);
    f.h = load_matrix(dir / cluster_file(j, "H"), MatrixFormat::RawBinary);
    f.singular_values =
        load_matrix(dir / cluster_file(j, "sv"), MatrixFormat::RawBinary).col(0);
    const ClusterCompressionConfig& cc =
        lib.config.compression.size() == 1
            ? lib.config.compression[0]
            : lib.config.compression[static_cast<std::size_t>(j)];
    f.method = cc.method;
    lib.factors.push_back(std::move(f));
  }

  finalize_library(lib);
  return lib;
}

IdentifyResult identify_clusters(const CompressedLibrary& lib, const Eigen::VectorXd& b,
                                 const IdentifyConfig& cfg) {
  if (b.size() != lib.dict.dim())
    throw ConfigError("identify_clusters: datum dimension mismatch");
  const std::vector<Eigen::MatrixXd> blocks = lib.w_blocks();

  GsConfig gs = cfg.gs;
  if (cfg.sensitivity_vartheta && gs.vartheta.size() == 0) {
    // per-group scale from the whitened block operator norms
    const int K = lib.clusters();
    Eigen::VectorXd v(K);
    for (int j = 0; j < K; ++j) {
      const Eigen::MatrixXd bw =
          lib.combined_dce.apply_whitener(blocks[static_cast<std::size_t>(j)]) *
          lib.priors[static_cast<std::size_t>(j)].sqrt;
      Eigen::MatrixXd gram = bw.transpose() * bw;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
      v(j) = 1.0 / std::max(eig.eigenvalues().maxCoeff(), 1e-300);
    }
    std::vector<double> sorted(v.data(), v.data() + v.size());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t half = sorted.size() / 2;
    const double median = sorted.size() % 2 == 1
                              ? sorted[half]
                              : 0.5 * (sorted[half - 1] + sorted[half]);
    gs.vartheta = v * (cfg.snr * cfg.snr / median);
  }

  IdentifyResult res;
  res.gs = gs_ias_solve(blocks, lib.priors, lib.combined_dce, b, gs);
  res.theta = res.gs.theta;
  if (cfg.rule == RelevanceRule::ThetaRatio) {
    res.selected = relevance_by_theta(res.theta, cfg.theta_star);
  } else {
    res.selected = threshold_significant(res.gs.h, blocks, lib.cluster_dce);
  }
  return res;
}

MatchResult deflated_solve(const CompressedLibrary& lib, const std::vector<int>& selected,
                           const Eigen::VectorXd& b, const DeflatedConfig& cfg) {
  if (selected.empty()) throw ConfigError("deflated_solve: empty cluster selection");
  if (b.size() != lib.dict.dim())
    throw ConfigError("deflated_solve: datum dimension mismatch");
  for (std::size_t i = 0; i < selected.size(); ++i) {
    if (selected[i] < 0 || selected[i] >= lib.clusters())
      throw ConfigError("deflated_solve: cluster index out of range");
    if (i > 0 && selected[i] <= selected[i - 1])
      throw ConfigError("deflated_solve: selection must be ascending and unique");
  }

  Eigen::Index m = 0;
  for (int j : selected) m += lib.partition.block_size(j);
  Eigen::MatrixXd d_sel(lib.dict.dim(), m);
  Eigen::MatrixXd residuals(lib.dict.dim(), m);
  Eigen::Index at = 0;
  for (int j : selected) {
    const Eigen::Index pj = lib.partition.block_size(j);
    const Eigen::MatrixXd block = lib.block(j);
    d_sel.middleCols(at, pj) = block;
    residuals.middleCols(at, pj) =
        compression_error_samples(block, lib.factors[static_cast<std::size_t>(j)]);
    at += pj;
  }

  const DceModel dce = fit_dce(residuals, cfg.dce_epsilon);
  const Eigen::MatrixXd a_white = dce.apply_whitener(d_sel);
  const Eigen::VectorXd b_white = dce.whiten_centered(b);

  IasConfig ias;
  ias.eta = cfg.eta;
  ias.theta_scales = sensitivity_scales(a_white, cfg.snr);
  ias.nonneg = cfg.nonneg;
  ias.max_iters = cfg.max_iters;
  ias.tol_x = cfg.tol_x;
  ias.inner = cfg.inner;
  const IasResult sol = ias_solve(a_white, b_white, ias);

  MatchResult res;
  res.selected = selected;
  res.x_hat = Eigen::VectorXd::Zero(lib.dict.size());
  at = 0;
  for (int j : selected) {
    const Eigen::Index pj = lib.partition.block_size(j);
    res.x_hat.segment(lib.partition.begin(j), pj) = sol.x.segment(at, pj);
    at += pj;
  }
  res.residual_norm = (b - lib.dict.atoms * res.x_hat).norm();
  const double b_norm = b.norm();
  res.relative_error = b_norm > 0.0 ? res.residual_norm / b_norm : 0.0;
  res.solve_iterations = sol.iterations;
  res.solve_energy = sol.energy_trace;
  return res;
}

MatchResult match(const CompressedLibrary& lib, const Eigen::VectorXd& b,
                  const IdentifyConfig& icfg, const DeflatedConfig& dcfg) {
  const IdentifyResult id = identify_clusters(lib, b, icfg);
  if (id.selected.empty()) {
    MatchResult res;
    res.empty = true;  // datum unexplainable at this threshold; keep it visible
    res.x_hat = Eigen::VectorXd::Zero(lib.dict.size());
    res.theta = id.theta;
    res.identify_iterations = id.gs.iterations;
    res.residual_norm = b.norm();
    res.relative_error = b.norm() > 0.0 ? 1.0 : 0.0;
    return res;
  }
  MatchResult res = deflated_solve(lib, id.selected, b, dcfg);
  res.theta = id.theta;
  res.identify_iterations = id.gs.iterations;
  return res;
}

Classifier::Classifier(const CompressedLibrary& lib, double noise_std,
                       const ClassifyConfig& cfg)
    : lib_(lib), cfg_(cfg), noise_std_(noise_std) {
  if (noise_std < 0.0) throw ConfigError("classifier: negative noise level");
  if (!cfg.use_dce && noise_std == 0.0)
    throw ConfigError("classifier: noise level must be positive without DCE whitening");
  noise_var_ = noise_std * noise_std;

  const int K = lib.clusters();
  classes_.reserve(static_cast<std::size_t>(K));
  for (int j = 0; j < K; ++j) {
    PerClass pc;
    const Eigen::MatrixXd& w = lib.factors[static_cast<std::size_t>(j)].w;
    pc.a_white = cfg.use_dce
                     ? lib.cluster_dce[static_cast<std::size_t>(j)].apply_whitener(
                           w, noise_var_)
                     : Eigen::MatrixXd(w / noise_std);
    pc.gram = Eigen::MatrixXd::Zero(w.cols(), w.cols());
    pc.gram.selfadjointView<Eigen::Lower>().rankUpdate(pc.a_white.transpose());
    pc.gram = pc.gram.selfadjointView<Eigen::Lower>();
    pc.vartheta = sensitivity_scales(pc.a_white, cfg.snr);
    classes_.push_back(std::move(pc));
  }
}

Classifier::Outcome Classifier::classify(const Eigen::VectorXd& b) const {
  if (b.size() != lib_.dict.dim()) throw ConfigError("classify: dimension mismatch");
  const int K = lib_.clusters();
  Outcome out;
  out.dssim_values = Eigen::VectorXd::Zero(K);
  for (int j = 0; j < K; ++j) {
    const PerClass& pc = classes_[static_cast<std::size_t>(j)];
    const Eigen::VectorXd b_white =
        cfg_.use_dce
            ? lib_.cluster_dce[static_cast<std::size_t>(j)].whiten_centered(b, noise_var_)
            : Eigen::VectorXd(b / noise_std_);

    IasConfig ias;
    ias.eta = cfg_.eta;
    ias.theta_scales = pc.vartheta;
    ias.nonneg = true;
    ias.max_iters = cfg_.max_iters;
    ias.tol_x = cfg_.tol_x;
    const IasResult sol = ias_solve_gram(pc.gram, pc.a_white.transpose() * b_white,
                                         b_white.squaredNorm(), ias);

    const Eigen::VectorXd b_hat = lib_.factors[static_cast<std::size_t>(j)].w * sol.x;
    out.dssim_values(j) = dssim(b, b_hat, cfg_.ssim);
  }
  Eigen::Index best = 0;
  out.dssim_values.minCoeff(&best);  // first minimum: ties go to the lowest class
  out.label = static_cast<int>(best) + 1;
  return out;
}

Classifier::Outcome classify_dssim(const CompressedLibrary& lib, const Eigen::VectorXd& b,
                                   double noise_std, const ClassifyConfig& cfg) {
  return Classifier(lib, noise_std, cfg).classify(b);
}

}  // namespace ldm
