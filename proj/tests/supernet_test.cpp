#include <doctest.h>

#include "pathnet/rng.hpp"
#include "pathnet/supernet.hpp"

using pathnet::Mat;
using pathnet::Pathway;
using pathnet::Supernet;
using pathnet::SupernetConfig;

namespace {

Supernet random_orthonormal_net(const SupernetConfig& config, std::uint64_t seed) {
  pathnet::Rng rng(seed);
  Supernet net;
  net.config = config;
  net.modules.resize(static_cast<std::size_t>(config.layers));
  for (int l = 0; l < config.layers; ++l) {
    const int rows = config.dims[static_cast<std::size_t>(l + 1)];
    const int cols = config.dims[static_cast<std::size_t>(l)];
    for (int k = 0; k < config.widths[static_cast<std::size_t>(l)]; ++k) {
      Mat g(cols, rows);
      for (int i = 0; i < cols; ++i) {
        for (int j = 0; j < rows; ++j) g(i, j) = rng.normal();
      }
      Eigen::HouseholderQR<Mat> qr(g);
      Mat q = qr.householderQ() * Mat::Identity(cols, rows);
      net.modules[static_cast<std::size_t>(l)].push_back(q.transpose());
    }
  }
  return net;
}

}  // namespace

TEST_CASE("compose single module returns the module itself") {
  Supernet net;
  net.config = SupernetConfig{1, {1}, {3, 2}};
  Mat b(2, 3);
  b << 1, 2, 3, 4, 5, 6;
  net.modules = {{b}};
  CHECK((compose(net, Pathway{{1}}) - b).norm() == 0.0);
}

TEST_CASE("compose matches a hand product for L=2") {
  // Selector-style 2x3 first module, then a row swap.
  Mat b1(2, 3);
  b1 << 1, 0, 0, 0, 1, 0;
  Mat b2(2, 2);
  b2 << 0, 1, 1, 0;
  Supernet net;
  net.config = SupernetConfig{2, {1, 1}, {3, 2, 2}};
  net.modules = {{b1}, {b2}};
  const Mat product = compose(net, Pathway{{1, 1}});
  // Hand multiplication: rows of b1 swapped.
  Mat expected(2, 3);
  expected.row(0) = b1.row(1);
  expected.row(1) = b1.row(0);
  CHECK((product - expected).norm() == 0.0);
}

TEST_CASE("compose of identity modules is the identity") {
  Supernet net;
  net.config = SupernetConfig{3, {2, 2, 2}, {4, 4, 4, 4}};
  net.modules.assign(3, std::vector<Mat>(2, Mat::Identity(4, 4)));
  for (const Pathway& path : enumerate_pathways(net.config)) {
    CHECK((compose(net, path) - Mat::Identity(4, 4)).norm() == 0.0);
  }
}

TEST_CASE("compose rejects out-of-range module indices") {
  Supernet net;
  net.config = SupernetConfig{1, {2}, {2, 2}};
  net.modules = {{Mat::Identity(2, 2), Mat::Identity(2, 2)}};
  CHECK_THROWS_AS(compose(net, Pathway{{3}}), std::invalid_argument);
  CHECK_THROWS_AS(compose(net, Pathway{{0}}), std::invalid_argument);
}

TEST_CASE("compose prefix then suffix equals the full composition") {
  const SupernetConfig config{3, {2, 3, 2}, {6, 5, 4, 3}};
  const Supernet net = random_orthonormal_net(config, 8);
  const Pathway path{{2, 3, 1}};
  const Mat full = compose(net, path);
  const Mat prefix = net.module(2, 3) * net.module(1, 2);
  const Mat joined = net.module(3, 1) * prefix;
  CHECK((full - joined).norm() <= 1e-10);
}

TEST_CASE("orthonormal nets give contractive pathway maps") {
  const SupernetConfig config{2, {2, 3}, {8, 5, 3}};
  const Supernet net = random_orthonormal_net(config, 3);
  for (const Pathway& path : enumerate_pathways(config)) {
    Eigen::JacobiSVD<Mat> svd(compose(net, path));
    CHECK(svd.singularValues()(0) <= 1.0 + 1e-6);
  }
}

TEST_CASE("enumerate_pathways basic counting") {
  CHECK(enumerate_pathways(SupernetConfig{2, {1, 1}, {2, 2, 2}}).size() == 1);
  CHECK(enumerate_pathways(SupernetConfig{2, {2, 3}, {2, 2, 2}}).size() == 6);
  // Two-layer tree with a single shared first module and 40 clusters.
  CHECK(enumerate_pathways(SupernetConfig{2, {1, 40}, {32, 8, 2}}).size() == 40);
}

TEST_CASE("enumerate_pathways is lexicographic and duplicate-free") {
  const auto paths = enumerate_pathways(SupernetConfig{2, {2, 3}, {2, 2, 2}});
  for (std::size_t i = 1; i < paths.size(); ++i) {
    CHECK(paths[i - 1].choice < paths[i].choice);
  }
  CHECK(paths.front().choice == std::vector<int>{1, 1});
  CHECK(paths.back().choice == std::vector<int>{2, 3});
}

TEST_CASE("enumerate_pathways errors past the cap, naming it") {
  const SupernetConfig config{4, {10, 10, 10, 10}, {2, 2, 2, 2, 2}};
  try {
    enumerate_pathways(config, 1000);
    FAIL("expected an exception");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("1000") != std::string::npos);
  }
}

TEST_CASE("dof matches the base architecture count") {
  // T*p_L + sum K_l p_l p_{l-1} = 400*2 + 1*8*32 + 40*2*8 = 1696.
  const SupernetConfig config{2, {1, 40}, {32, 8, 2}};
  CHECK(pathnet::dof(config, 400) == 1696);
}

TEST_CASE("dof specializes to the one-layer parameter counts") {
  // Vanilla: L=1, K=1, p1=R -> Rp + TR.
  const int p = 32, big_r = 8, t = 400;
  CHECK(pathnet::dof(SupernetConfig{1, {1}, {p, big_r}}, t) ==
        big_r * p + t * big_r);
  // Cluster: L=1, K modules of width r -> Krp + Tr.
  const int k = 40, r = 2;
  CHECK(pathnet::dof(SupernetConfig{1, {k}, {p, r}}, t) == k * r * p + t * r);
}

TEST_CASE("dof is monotone in T, widths, and dims") {
  const SupernetConfig base{2, {2, 3}, {6, 5, 4}};
  const auto value = pathnet::dof(base, 10);
  CHECK(pathnet::dof(base, 11) > value);
  SupernetConfig wider = base;
  wider.widths[1] = 4;
  CHECK(pathnet::dof(wider, 10) > value);
  SupernetConfig deeper_dim = base;
  deeper_dim.dims[1] = 6;
  CHECK(pathnet::dof(deeper_dim, 10) > value);
}

TEST_CASE("supernet JSON round trip is bit exact") {
  const SupernetConfig config{2, {2, 2}, {5, 4, 3}};
  Supernet net = random_orthonormal_net(config, 17);
  net.modules[0][1](0, 0) = 0.1 + 0.2;  // a value without a short decimal form
  const std::string text = pathnet::supernet_to_json(net);
  const Supernet back = pathnet::supernet_from_json(text);
  CHECK(back.config.layers == config.layers);
  CHECK(back.config.widths == config.widths);
  CHECK(back.config.dims == config.dims);
  for (int l = 0; l < config.layers; ++l) {
    for (int k = 0; k < config.widths[static_cast<std::size_t>(l)]; ++k) {
      const Mat& a = net.modules[static_cast<std::size_t>(l)][static_cast<std::size_t>(k)];
      const Mat& b = back.modules[static_cast<std::size_t>(l)][static_cast<std::size_t>(k)];
      REQUIRE(a.rows() == b.rows());
      for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
          CHECK(a(i, j) == b(i, j));  // exact, not approximate
        }
      }
    }
  }
}

TEST_CASE("config validation rejects malformed shapes") {
  const SupernetConfig no_layers{0, {}, {1}};
  CHECK_THROWS_AS(no_layers.validate(), std::invalid_argument);
  const SupernetConfig short_dims{1, {1}, {1}};
  CHECK_THROWS_AS(short_dims.validate(), std::invalid_argument);
  const SupernetConfig zero_width{1, {0}, {1, 1}};
  CHECK_THROWS_AS(zero_width.validate(), std::invalid_argument);
}
