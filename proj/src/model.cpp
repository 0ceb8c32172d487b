#include "pml/model.hpp"

#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "pml/csv.hpp"
#include "pml/errors.hpp"

namespace pml {

Model Model::create(const ModelShape& shape, std::uint64_t seed, bool zero_margin_outputs) {
  std::mt19937_64 rng(seed ^ 0x243f6a8885a308d3ULL);
  Model m;
  m.shape = shape;
  {
    const Index widths[] = {shape.input_dim, shape.hidden_width, shape.hidden_width, shape.feature_dim};
    const Activation acts[] = {Activation::Relu, Activation::Relu, Activation::Identity};
    m.backbone = DenseNet<double>::glorot(widths, acts, rng);
  }
  m.head = ClassifierHead<double>::glorot(shape.classes, shape.feature_dim, rng);
  {
    const Index widths[] = {shape.stats_width(), shape.margin_hidden, 2};
    const Activation acts[] = {Activation::Tanh, Activation::Identity};
    m.ordinal = DenseNet<double>::glorot(widths, acts, rng);
  }
  {
    const Index widths[] = {shape.stats_width(), shape.margin_hidden, 1};
    const Activation acts[] = {Activation::Tanh, Activation::Identity};
    m.variational = DenseNet<double>::glorot(widths, acts, rng);
  }
  if (zero_margin_outputs) {
    m.ordinal.layers().back().weight.setZero();
    m.variational.layers().back().weight.setZero();
  }
  return m;
}

Index Model::param_count() const {
  return backbone.param_count() + head.weight.size() + ordinal.param_count() + variational.param_count();
}

ModelGradient ModelGradient::zeros(const Model& model) {
  return {model.backbone.zero_gradient(), Matrix<double>::Zero(model.head.weight.rows(), model.head.weight.cols()),
          model.ordinal.zero_gradient(), model.variational.zero_gradient()};
}

namespace {

template <typename Fn>
void for_each_block(Model& model, const ModelGradient* grad, Fn&& fn) {
  auto net = [&](DenseNet<double>& n, const DenseNetGradient<double>* g) {
    for (std::size_t k = 0; k < n.depth(); ++k) {
      auto& layer = n.layers()[k];
      fn(std::span<double>(layer.weight.data(), static_cast<std::size_t>(layer.weight.size())),
         g ? std::span<const double>(g->weight[k].data(), static_cast<std::size_t>(g->weight[k].size()))
           : std::span<const double>());
      fn(std::span<double>(layer.bias.data(), static_cast<std::size_t>(layer.bias.size())),
         g ? std::span<const double>(g->bias[k].data(), static_cast<std::size_t>(g->bias[k].size()))
           : std::span<const double>());
    }
  };
  net(model.backbone, grad ? &grad->backbone : nullptr);
  fn(std::span<double>(model.head.weight.data(), static_cast<std::size_t>(model.head.weight.size())),
     grad ? std::span<const double>(grad->head.data(), static_cast<std::size_t>(grad->head.size()))
          : std::span<const double>());
  net(model.ordinal, grad ? &grad->ordinal : nullptr);
  net(model.variational, grad ? &grad->variational : nullptr);
}

void write_net(std::ostream& out, const char* name, const DenseNet<double>& net) {
  out << "net " << name << ' ' << net.depth() << '\n';
  for (const auto& layer : net.layers()) {
    out << "layer " << layer.weight.rows() << ' ' << layer.weight.cols() << ' ' << to_string(layer.activation) << '\n';
    for (Index i = 0; i < layer.weight.size(); ++i) out << (i ? " " : "") << format_real(layer.weight.data()[i]);
    out << '\n';
    for (Index i = 0; i < layer.bias.size(); ++i) out << (i ? " " : "") << format_real(layer.bias[i]);
    out << '\n';
  }
}

double read_real(std::istream& in) {
  std::string token;
  double v = 0.0;
  if (!(in >> token) || !parse_real(token, v)) throw DataError("model file: bad number '" + token + "'");
  return v;
}

void expect(std::istream& in, const std::string& word) {
  std::string token;
  if (!(in >> token) || token != word) throw DataError("model file: expected '" + word + "', got '" + token + "'");
}

DenseNet<double> read_net(std::istream& in, const char* name) {
  expect(in, "net");
  expect(in, name);
  std::size_t depth = 0;
  if (!(in >> depth)) throw DataError("model file: bad depth");
  std::vector<DenseLayer<double>> layers;
  for (std::size_t k = 0; k < depth; ++k) {
    expect(in, "layer");
    Index rows = 0;
    Index cols = 0;
    std::string act;
    if (!(in >> rows >> cols >> act) || rows < 1 || cols < 1) throw DataError("model file: bad layer header");
    DenseLayer<double> layer{Matrix<double>(rows, cols), Vector<double>(rows), Activation::Identity};
    try {
      layer.activation = parse_activation(act);
    } catch (const DomainError& e) {
      throw DataError(std::string("model file: ") + e.what());
    }
    for (Index i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = read_real(in);
    for (Index i = 0; i < rows; ++i) layer.bias[i] = read_real(in);
    layers.push_back(std::move(layer));
  }
  try {
    return DenseNet<double>(std::move(layers));
  } catch (const ShapeError& e) {
    throw DataError(std::string("model file: ") + e.what());
  }
}

}  // namespace

std::vector<ParamSlot<double>> param_slots(Model& model, const ModelGradient& grad) {
  std::vector<ParamSlot<double>> slots;
  for_each_block(model, &grad, [&](std::span<double> v, std::span<const double> g) {
    if (v.size() != g.size()) throw ShapeError("gradient block does not match its parameter block");
    slots.push_back({v, g});
  });
  return slots;
}

std::vector<std::span<double>> param_views(Model& model) {
  std::vector<std::span<double>> views;
  for_each_block(model, nullptr, [&](std::span<double> v, std::span<const double>) { views.push_back(v); });
  return views;
}

void save_model(const Model& model, std::ostream& out) {
  const auto& s = model.shape;
  out << "pml-model 1\n"
      << "shape " << s.input_dim << ' ' << s.hidden_width << ' ' << s.feature_dim << ' ' << s.classes << ' '
      << s.margin_hidden << '\n';
  write_net(out, "backbone", model.backbone);
  out << "head " << model.head.weight.rows() << ' ' << model.head.weight.cols() << '\n';
  for (Index i = 0; i < model.head.weight.size(); ++i) out << (i ? " " : "") << format_real(model.head.weight.data()[i]);
  out << '\n';
  write_net(out, "ordinal", model.ordinal);
  write_net(out, "variational", model.variational);
}

void save_model(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model '" + path.string() + "'");
  save_model(model, out);
}

Model load_model(std::istream& in) {
  expect(in, "pml-model");
  expect(in, "1");
  expect(in, "shape");
  Model m;
  auto& s = m.shape;
  if (!(in >> s.input_dim >> s.hidden_width >> s.feature_dim >> s.classes >> s.margin_hidden)) {
    throw DataError("model file: bad shape line");
  }
  m.backbone = read_net(in, "backbone");
  expect(in, "head");
  Index rows = 0;
  Index cols = 0;
  if (!(in >> rows >> cols) || rows != s.classes || cols != s.feature_dim) throw DataError("model file: bad head shape");
  m.head.weight.resize(rows, cols);
  for (Index i = 0; i < m.head.weight.size(); ++i) m.head.weight.data()[i] = read_real(in);
  m.ordinal = read_net(in, "ordinal");
  m.variational = read_net(in, "variational");
  if (m.backbone.input_width() != s.input_dim || m.backbone.output_width() != s.feature_dim) {
    throw DataError("model file: backbone does not match the declared shape");
  }
  return m;
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read model '" + path.string() + "'");
  return load_model(in);
}

}  // namespace pml
