#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "pml/nn.hpp"
#include "pml/optimizer.hpp"

namespace pml {

struct ModelShape {
  Index input_dim = 8;
  Index hidden_width = 32;
  Index feature_dim = 16;
  Index classes = 20;
  Index margin_hidden = 16;

  // Width of a statistics row: center, intra, inter.
  Index stats_width() const { return feature_dim + 1 + classes; }
};

// Backbone feature extractor, classifier head and both margin networks.
struct Model {
  ModelShape shape;
  DenseNet<double> backbone;      // input -> relu -> relu -> features
  ClassifierHead<double> head;    // features -> logits
  DenseNet<double> ordinal;       // stats row -> (mu, sigma) pre-activations
  DenseNet<double> variational;   // residual row -> margin

  // All four parts are initialized from one stream in a fixed order, so the
  // result depends only on shape and seed.
  static Model create(const ModelShape& shape, std::uint64_t seed, bool zero_margin_outputs);

  Index param_count() const;
};

struct ModelGradient {
  DenseNetGradient<double> backbone;
  Matrix<double> head;
  DenseNetGradient<double> ordinal;
  DenseNetGradient<double> variational;

  static ModelGradient zeros(const Model& model);
};

// Parameter/gradient slots in a fixed order: backbone, head, ordinal, variational.
std::vector<ParamSlot<double>> param_slots(Model& model, const ModelGradient& grad);

// Mutable views of every trainable value, in the same order as param_slots.
std::vector<std::span<double>> param_views(Model& model);

void save_model(const Model& model, std::ostream& out);
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(std::istream& in);
Model load_model(const std::filesystem::path& path);

}  // namespace pml
