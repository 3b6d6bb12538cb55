#include "pathnet/supernet.hpp"

#include <nlohmann/json.hpp>
#include <stdexcept>

namespace pathnet {

void SupernetConfig::validate() const {
  if (layers < 1) throw std::invalid_argument("supernet: L must be >= 1");
  if (static_cast<int>(widths.size()) != layers ||
      static_cast<int>(dims.size()) != layers + 1) {
    throw std::invalid_argument("supernet: widths/dims sizes do not match L");
  }
  for (int k : widths) {
    if (k < 1) throw std::invalid_argument("supernet: layer width must be >= 1");
  }
  for (int p : dims) {
    if (p < 1) throw std::invalid_argument("supernet: layer dim must be >= 1");
  }
}

const Mat& Supernet::module(int layer, int index) const {
  if (layer < 1 || layer > config.layers || index < 1 ||
      index > config.widths[static_cast<std::size_t>(layer - 1)]) {
    throw std::invalid_argument("supernet: module (" + std::to_string(layer) +
                                "," + std::to_string(index) + ") out of range");
  }
  return modules[static_cast<std::size_t>(layer - 1)]
                [static_cast<std::size_t>(index - 1)];
}

void Supernet::validate() const {
  config.validate();
  if (static_cast<int>(modules.size()) != config.layers) {
    throw std::invalid_argument("supernet: module layer count mismatch");
  }
  for (int l = 0; l < config.layers; ++l) {
    const auto& layer = modules[static_cast<std::size_t>(l)];
    if (static_cast<int>(layer.size()) != config.widths[static_cast<std::size_t>(l)]) {
      throw std::invalid_argument("supernet: layer " + std::to_string(l + 1) +
                                  " width mismatch");
    }
    for (const Mat& m : layer) {
      if (m.rows() != config.dims[static_cast<std::size_t>(l + 1)] ||
          m.cols() != config.dims[static_cast<std::size_t>(l)]) {
        throw std::invalid_argument("supernet: module shape mismatch in layer " +
                                    std::to_string(l + 1));
      }
    }
  }
}

Mat compose(const Supernet& net, const Pathway& path) {
  if (static_cast<int>(path.choice.size()) != net.config.layers) {
    throw std::invalid_argument("compose: pathway length != L");
  }
  Mat product = net.module(1, path.choice[0]);
  for (int l = 2; l <= net.config.layers; ++l) {
    product = net.module(l, path.choice[static_cast<std::size_t>(l - 1)]) * product;
  }
  return product;
}

std::vector<Pathway> enumerate_pathways(const SupernetConfig& config,
                                        std::int64_t cap) {
  config.validate();
  std::int64_t total = 1;
  for (int k : config.widths) {
    total *= k;
    if (total > cap) {
      throw std::invalid_argument("enumerate_pathways: |A| exceeds cap " +
                                  std::to_string(cap));
    }
  }
  std::vector<Pathway> result;
  result.reserve(static_cast<std::size_t>(total));
  Pathway current;
  current.choice.assign(static_cast<std::size_t>(config.layers), 1);
  for (std::int64_t i = 0; i < total; ++i) {
    result.push_back(current);
    // Lexicographic increment, last layer fastest.
    for (int l = config.layers - 1; l >= 0; --l) {
      if (++current.choice[static_cast<std::size_t>(l)] <=
          config.widths[static_cast<std::size_t>(l)]) {
        break;
      }
      current.choice[static_cast<std::size_t>(l)] = 1;
    }
  }
  return result;
}

std::int64_t dof(const SupernetConfig& config, std::int64_t task_count) {
  config.validate();
  if (task_count < 1) throw std::invalid_argument("dof: T must be >= 1");
  std::int64_t total = task_count * config.head_dim();
  for (int l = 1; l <= config.layers; ++l) {
    total += static_cast<std::int64_t>(config.widths[static_cast<std::size_t>(l - 1)]) *
             config.dims[static_cast<std::size_t>(l)] *
             config.dims[static_cast<std::size_t>(l - 1)];
  }
  return total;
}

std::string supernet_to_json(const Supernet& net) {
  net.validate();
  nlohmann::json j;
  j["config"]["L"] = net.config.layers;
  j["config"]["K"] = net.config.widths;
  j["config"]["p"] = net.config.dims;
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : net.modules) {
    nlohmann::json mods = nlohmann::json::array();
    for (const Mat& m : layer) {
      std::vector<double> flat(static_cast<std::size_t>(m.size()));
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
          flat[static_cast<std::size_t>(r * m.cols() + c)] = m(r, c);
        }
      }
      mods.push_back(flat);
    }
    layers.push_back(mods);
  }
  j["modules"] = layers;
  return j.dump();
}

Supernet supernet_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  Supernet net;
  net.config.layers = j.at("config").at("L").get<int>();
  net.config.widths = j.at("config").at("K").get<std::vector<int>>();
  net.config.dims = j.at("config").at("p").get<std::vector<int>>();
  net.config.validate();
  const auto& layers = j.at("modules");
  net.modules.resize(static_cast<std::size_t>(net.config.layers));
  for (int l = 0; l < net.config.layers; ++l) {
    const auto& mods = layers.at(static_cast<std::size_t>(l));
    const int rows = net.config.dims[static_cast<std::size_t>(l + 1)];
    const int cols = net.config.dims[static_cast<std::size_t>(l)];
    for (const auto& flat_json : mods) {
      const auto flat = flat_json.get<std::vector<double>>();
      if (static_cast<int>(flat.size()) != rows * cols) {
        throw std::invalid_argument("supernet_from_json: module size mismatch");
      }
      Mat m(rows, cols);
      for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
          m(r, c) = flat[static_cast<std::size_t>(r * cols + c)];
        }
      }
      net.modules[static_cast<std::size_t>(l)].push_back(std::move(m));
    }
  }
  net.validate();
  return net;
}

}  // namespace pathnet
