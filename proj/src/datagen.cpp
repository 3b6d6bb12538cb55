#include "pathnet/datagen.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

namespace pathnet {

namespace {

// Substream tags so regenerating one piece never shifts another.
enum Stream : std::uint64_t {
  kModules = 1,
  kHeads = 2,
  kData = 3,
  kAnchors = 4,
};

Vec sample_unit_vector(int dim, Rng& rng) {
  Vec v(dim);
  double norm2 = 0.0;
  do {
    for (int i = 0; i < dim; ++i) v(i) = rng.normal();
    norm2 = v.squaredNorm();
  } while (norm2 == 0.0);
  return v / std::sqrt(norm2);
}

Mat sample_gaussian(int rows, int cols, Rng& rng) {
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = rng.normal();
  }
  return m;
}

void recompute_theta(GroundTruth& truth) {
  truth.theta.clear();
  truth.theta.reserve(truth.heads.size());
  for (std::size_t t = 0; t < truth.heads.size(); ++t) {
    const Mat rep = compose(truth.net, truth.pathways[t]);
    truth.theta.push_back(rep.transpose() * truth.heads[t]);
  }
}

}  // namespace

void GroundTruth::validate() const {
  net.validate();
  if (heads.size() != pathways.size() || heads.size() != theta.size()) {
    throw std::invalid_argument("ground truth: per-task list sizes differ");
  }
  for (const Vec& h : heads) {
    if (h.size() != net.config.head_dim()) {
      throw std::invalid_argument("ground truth: head dimension mismatch");
    }
  }
}

Mat sample_haar_rows(int rows, int cols, Rng& rng) {
  if (rows > cols) {
    throw std::invalid_argument("sample_haar_rows: rows > cols");
  }
  const Mat g = sample_gaussian(cols, rows, rng);
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ() * Mat::Identity(cols, rows);
  const Mat r = qr.matrixQR().topRows(rows).triangularView<Eigen::Upper>();
  for (int j = 0; j < rows; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q.transpose();
}

GroundTruth sample_hierarchical_truth(int p, int big_r, int r,
                                      const std::vector<int>& cluster_sizes,
                                      std::uint64_t seed) {
  if (!(r >= 1 && r <= big_r && big_r <= p)) {
    throw std::invalid_argument("sample_hierarchical_truth: need r <= R <= p");
  }
  const int k = static_cast<int>(cluster_sizes.size());
  if (k < 1) {
    throw std::invalid_argument("sample_hierarchical_truth: K must be >= 1");
  }
  for (int size : cluster_sizes) {
    if (size < 1) {
      throw std::invalid_argument(
          "sample_hierarchical_truth: cluster sizes must be >= 1");
    }
  }
  Rng root(seed);
  Rng module_rng = root.substream(kModules);

  GroundTruth truth;
  truth.net.config = SupernetConfig{2, {1, k}, {p, big_r, r}};
  truth.net.modules.resize(2);
  truth.net.modules[0].push_back(sample_haar_rows(big_r, p, module_rng));
  for (int c = 0; c < k; ++c) {
    truth.net.modules[1].push_back(sample_haar_rows(r, big_r, module_rng));
  }

  Rng head_root = root.substream(kHeads);
  int task = 0;
  for (int c = 0; c < k; ++c) {
    for (int i = 0; i < cluster_sizes[static_cast<std::size_t>(c)]; ++i, ++task) {
      Rng head_rng = head_root.substream(static_cast<std::uint64_t>(task));
      truth.heads.push_back(sample_unit_vector(r, head_rng));
      truth.pathways.push_back(Pathway{{1, c + 1}});
    }
  }
  recompute_theta(truth);
  return truth;
}

GroundTruth sample_hierarchical_truth(int p, int big_r, int r, int k,
                                      int tasks_per_cluster,
                                      std::uint64_t seed) {
  if (k < 1 || tasks_per_cluster < 1) {
    throw std::invalid_argument("sample_hierarchical_truth: K and T/K must be >= 1");
  }
  return sample_hierarchical_truth(
      p, big_r, r, std::vector<int>(static_cast<std::size_t>(k), tasks_per_cluster),
      seed);
}

GroundTruth correlate_heads(const GroundTruth& truth, double gamma,
                            std::uint64_t seed) {
  if (gamma < 0.0 || gamma > 1.0) {
    throw std::invalid_argument("correlate_heads: gamma outside [0,1]");
  }
  if (truth.net.config.layers != 2 || truth.net.config.widths[0] != 1) {
    throw std::invalid_argument("correlate_heads: needs the L=2 hierarchical model");
  }
  const int k = truth.net.config.widths[1];
  const int head_dim = truth.net.config.head_dim();

  Rng anchor_root = Rng(seed).substream(kAnchors);
  std::vector<Vec> anchors;
  anchors.reserve(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    Rng anchor_rng = anchor_root.substream(static_cast<std::uint64_t>(c));
    anchors.push_back(sample_unit_vector(head_dim, anchor_rng));
  }

  GroundTruth mixed = truth;
  for (std::size_t t = 0; t < mixed.heads.size(); ++t) {
    const int cluster = mixed.pathways[t].choice[1];
    Vec h = gamma * anchors[static_cast<std::size_t>(cluster - 1)] +
            (1.0 - gamma) * mixed.heads[t];
    const double norm = h.norm();
    if (norm == 0.0) {
      throw std::invalid_argument("correlate_heads: degenerate zero head");
    }
    mixed.heads[t] = h / norm;
  }
  recompute_theta(mixed);
  return mixed;
}

TaskBundle sample_datasets(const GroundTruth& truth,
                           const std::vector<int>& samples_per_task,
                           double sigma, std::uint64_t seed) {
  if (static_cast<int>(samples_per_task.size()) != truth.task_count()) {
    throw std::invalid_argument("sample_datasets: N list length != task count");
  }
  if (sigma < 0.0) {
    throw std::invalid_argument("sample_datasets: negative sigma");
  }
  const int p = truth.net.config.input_dim();
  TaskBundle bundle;
  bundle.seed = seed;
  bundle.truth = truth;
  Rng data_root = Rng(seed).substream(kData);
  for (int t = 0; t < truth.task_count(); ++t) {
    const int n = samples_per_task[static_cast<std::size_t>(t)];
    if (n < 1) throw std::invalid_argument("sample_datasets: N must be >= 1");
    Rng task_rng = data_root.substream(static_cast<std::uint64_t>(t));
    TaskDataset ds;
    ds.noise_sigma = sigma;
    ds.x.resize(n, p);
    ds.y.resize(n);
    // Row-by-row draws keep the per-task prefix stable across N sweeps.
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < p; ++j) ds.x(i, j) = task_rng.normal();
      const double noise = task_rng.normal();
      ds.y(i) = ds.x.row(i).dot(truth.theta[static_cast<std::size_t>(t)]) +
                sigma * noise;
    }
    bundle.tasks.push_back(std::move(ds));
  }
  return bundle;
}

int FairnessTruth::majority_count() const {
  int count = 0;
  for (int g : groups) count += g == 0 ? 1 : 0;
  return count;
}

int FairnessTruth::minority_count() const {
  return static_cast<int>(groups.size()) - majority_count();
}

GroundTruth FairnessTruth::as_ground_truth() const {
  if (subspace0.rows() != subspace1.rows()) {
    throw std::invalid_argument("fairness truth: r != r1, no supernet form");
  }
  GroundTruth truth;
  const int p = static_cast<int>(subspace0.cols());
  const int r = static_cast<int>(subspace0.rows());
  truth.net.config = SupernetConfig{1, {2}, {p, r}};
  truth.net.modules.resize(1);
  truth.net.modules[0] = {subspace0, subspace1};
  truth.heads = heads;
  for (int g : groups) truth.pathways.push_back(Pathway{{g + 1}});
  truth.theta = theta;
  return truth;
}

FairnessTruth sample_fairness_truth(int p, int r, int r1, int t0, int t1,
                                    std::uint64_t seed) {
  if (r + r1 > p) {
    throw std::invalid_argument("sample_fairness_truth: r + r1 > p");
  }
  if (!(t0 >= t1 && t1 >= 0 && t0 >= 1)) {
    throw std::invalid_argument("sample_fairness_truth: need T0 >= T1 >= 0");
  }
  Rng root(seed);
  Rng module_rng = root.substream(kModules);
  // Disjoint rows of one orthonormal basis make the subspaces exactly
  // orthogonal.
  const Mat basis = sample_haar_rows(r + r1, p, module_rng);

  FairnessTruth truth;
  truth.subspace0 = basis.topRows(r);
  truth.subspace1 = basis.bottomRows(r1);
  Rng head_root = root.substream(kHeads);
  for (int t = 0; t < t0 + t1; ++t) {
    Rng head_rng = head_root.substream(static_cast<std::uint64_t>(t));
    const bool minority = t >= t0;
    truth.groups.push_back(minority ? 1 : 0);
    truth.heads.push_back(sample_unit_vector(minority ? r1 : r, head_rng));
    const Mat& subspace = minority ? truth.subspace1 : truth.subspace0;
    truth.theta.push_back(subspace.transpose() * truth.heads.back());
  }
  return truth;
}

AdversarialScenario sample_adversarial_scenario(int p, int big_r, int t,
                                                std::uint64_t seed) {
  if (4 * big_r > p) {
    throw std::invalid_argument("sample_adversarial_scenario: need 4R <= p");
  }
  if (t % 4 != 0 || t / 4 < big_r) {
    throw std::invalid_argument(
        "sample_adversarial_scenario: need 4 | T and T/4 >= R");
  }
  Rng root(seed);
  Rng module_rng = root.substream(kModules);
  const Mat basis = sample_haar_rows(4 * big_r, p, module_rng);

  AdversarialScenario scenario;
  const int per_group = t / 4;
  // Ground truth: groups 1,2 share path 1 and groups 3,4 share path 2.
  scenario.truth.net.config = SupernetConfig{1, {2}, {p, 2 * big_r}};
  scenario.truth.net.modules.resize(1);
  scenario.truth.net.modules[0].push_back(basis.middleRows(0, 2 * big_r));
  scenario.truth.net.modules[0].push_back(basis.middleRows(2 * big_r, 2 * big_r));

  // Swapped solution: B1 spans S1 u S3, B2 spans S2 u S4.
  scenario.swapped.net.config = scenario.truth.net.config;
  scenario.swapped.net.modules.resize(1);
  Mat swapped1(2 * big_r, p), swapped2(2 * big_r, p);
  swapped1 << basis.middleRows(0, big_r), basis.middleRows(2 * big_r, big_r);
  swapped2 << basis.middleRows(big_r, big_r), basis.middleRows(3 * big_r, big_r);
  scenario.swapped.net.modules[0] = {swapped1, swapped2};

  Rng head_root = root.substream(kHeads);
  for (int i = 0; i < t; ++i) {
    const int group = i / per_group + 1;  // 1..4
    scenario.group_of_task.push_back(group);
    Rng head_rng = head_root.substream(static_cast<std::uint64_t>(i));
    const Vec local = sample_unit_vector(big_r, head_rng);
    const Mat group_basis = basis.middleRows((group - 1) * big_r, big_r);
    const Vec theta = group_basis.transpose() * local;
    scenario.truth.theta.push_back(theta);
    const int true_path = group <= 2 ? 1 : 2;
    scenario.truth.pathways.push_back(Pathway{{true_path}});
    scenario.truth.heads.push_back(
        scenario.truth.net.modules[0][static_cast<std::size_t>(true_path - 1)] *
        theta);
    const int swapped_path = (group == 1 || group == 3) ? 1 : 2;
    scenario.swapped.pathways.push_back(Pathway{{swapped_path}});
    scenario.swapped.heads.push_back(
        scenario.swapped.net.modules[0][static_cast<std::size_t>(swapped_path - 1)] *
        theta);
  }
  return scenario;
}

void export_bundle(const TaskBundle& bundle, const std::string& directory) {
  namespace fs = std::filesystem;
  fs::create_directories(directory);
  for (int t = 0; t < bundle.task_count(); ++t) {
    const TaskDataset& ds = bundle.tasks[static_cast<std::size_t>(t)];
    std::ofstream out(fs::path(directory) / ("task_" + std::to_string(t) + ".csv"));
    if (!out) throw std::runtime_error("export_bundle: cannot write " + directory);
    for (Eigen::Index j = 0; j < ds.x.cols(); ++j) {
      out << "x_" << (j + 1) << ",";
    }
    out << "y\n";
    out.precision(17);
    for (Eigen::Index i = 0; i < ds.x.rows(); ++i) {
      for (Eigen::Index j = 0; j < ds.x.cols(); ++j) out << ds.x(i, j) << ",";
      out << ds.y(i) << "\n";
    }
  }
  if (bundle.truth) {
    nlohmann::json j;
    j["supernet"] = nlohmann::json::parse(supernet_to_json(bundle.truth->net));
    nlohmann::json heads = nlohmann::json::array();
    for (const Vec& h : bundle.truth->heads) {
      heads.push_back(std::vector<double>(h.data(), h.data() + h.size()));
    }
    j["heads"] = heads;
    nlohmann::json paths = nlohmann::json::array();
    for (const Pathway& path : bundle.truth->pathways) {
      std::vector<int> zero_based;
      for (int c : path.choice) zero_based.push_back(c - 1);
      paths.push_back(zero_based);
    }
    j["pathways_zero_based"] = paths;
    std::ofstream out(fs::path(directory) / "truth.json");
    out << j.dump(2) << "\n";
  }
}

}  // namespace pathnet
