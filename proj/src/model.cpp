#include "pjem/model.hpp"

#include <cmath>
#include <stdexcept>

#include "pjem/rng.hpp"

namespace pjem {

void EncoderConfig::validate() const {
  if (input_dim < 1) throw std::invalid_argument("encoder: input_dim must be positive");
  if (widths.empty()) throw std::invalid_argument("encoder: needs at least one layer width");
  for (int w : widths) {
    if (w < 1) throw std::invalid_argument("encoder: layer widths must be positive");
  }
}

void SegmentLayout::validate() const {
  if (segments < 2) throw std::invalid_argument("layout: K must be >= 2");
  if (entries_per_segment < 2) throw std::invalid_argument("layout: M must be >= 2");
}

void ProjectorConfig::validate() const {
  if (hidden < 1) throw std::invalid_argument("projector: hidden width must be >= 1");
  if (depth < 1) throw std::invalid_argument("projector: depth must be >= 1");
}

void ParameterStore::add(std::string name, NumericArray value) {
  for (const auto& [existing, _] : items_) {
    if (existing == name) throw std::invalid_argument("ParameterStore: duplicate name " + name);
  }
  items_.emplace_back(std::move(name), std::move(value));
}

NumericArray& ParameterStore::at(const std::string& name) {
  for (auto& [existing, value] : items_) {
    if (existing == name) return value;
  }
  throw std::out_of_range("ParameterStore: no parameter named " + name);
}

const NumericArray& ParameterStore::at(const std::string& name) const {
  return const_cast<ParameterStore*>(this)->at(name);
}

namespace {

NumericArray fan_scaled_uniform(Rng& rng, int fan_in, int fan_out) {
  double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  NumericArray w = NumericArray::zeros({fan_in, fan_out});
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-bound, bound);
  return w;
}

// Layer dimension chain of the projector: D_h -> hidden^(depth-1) -> D_z.
std::vector<int> projector_dims(const EncoderConfig& encoder, const SegmentLayout& layout,
                                const ProjectorConfig& projector) {
  std::vector<int> dims{encoder.repr_dim()};
  for (int i = 0; i + 1 < projector.depth; ++i) dims.push_back(projector.hidden);
  dims.push_back(layout.embed_dim());
  return dims;
}

}  // namespace

ParameterStore init_parameters(const EncoderConfig& encoder, const SegmentLayout& layout,
                               const ProjectorConfig& projector, std::uint64_t seed) {
  encoder.validate();
  layout.validate();
  projector.validate();

  ParameterStore store;
  store.encoder = encoder;
  store.layout = layout;
  store.projector = projector;

  Rng rng(mix_seed(seed, 0x1217ull));
  int fan_in = encoder.input_dim;
  for (std::size_t l = 0; l < encoder.widths.size(); ++l) {
    int fan_out = encoder.widths[l];
    store.add("encoder.l" + std::to_string(l) + ".weight", fan_scaled_uniform(rng, fan_in, fan_out));
    store.add("encoder.l" + std::to_string(l) + ".bias", NumericArray::zeros({fan_out}));
    fan_in = fan_out;
  }
  std::vector<int> dims = projector_dims(encoder, layout, projector);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    store.add("projector.l" + std::to_string(l) + ".weight",
              fan_scaled_uniform(rng, dims[l], dims[l + 1]));
    store.add("projector.l" + std::to_string(l) + ".bias", NumericArray::zeros({dims[l + 1]}));
  }
  return store;
}

Matrix stack_points(std::span<const PointCloud> batch) {
  if (batch.empty()) throw std::invalid_argument("stack_points: empty batch");
  const int per_cloud = batch[0].point_count();
  for (const PointCloud& cloud : batch) {
    if (cloud.point_count() != per_cloud) {
      throw std::invalid_argument("stack_points: mixed point counts " + std::to_string(per_cloud) + " vs " +
                                  std::to_string(cloud.point_count()));
    }
  }
  Matrix stacked(static_cast<Eigen::Index>(batch.size()) * per_cloud, 3);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    stacked.middleRows(static_cast<Eigen::Index>(i) * per_cloud, per_cloud) = batch[i].points;
  }
  return stacked;
}

ForwardIds wire_model_forward(Tape& tape, const ParameterStore& shape_source, std::span<const ValueId> params,
                              ValueId points, int clouds) {
  if (clouds < 1) throw std::invalid_argument("model forward: need at least one cloud");
  if (params.size() != shape_source.size()) {
    throw std::invalid_argument("model forward: expected " + std::to_string(shape_source.size()) +
                                " parameter leaves, got " + std::to_string(params.size()));
  }
  const int point_rows = tape.value(points).rows();
  if (point_rows % clouds != 0) {
    throw std::invalid_argument("model forward: point rows not divisible by cloud count");
  }
  const int per_cloud = point_rows / clouds;

  auto param = [&](const std::string& name) {
    for (std::size_t i = 0; i < shape_source.items().size(); ++i) {
      if (shape_source.items()[i].first == name) return params[i];
    }
    throw std::out_of_range("model forward: no parameter named " + name);
  };

  // Shared per-point stack.
  ValueId features = points;
  for (std::size_t l = 0; l < shape_source.encoder.widths.size(); ++l) {
    std::string base = "encoder.l" + std::to_string(l);
    features = relu(tape, add(tape, matmul(tape, features, param(base + ".weight")), param(base + ".bias")));
  }

  // Symmetric pooling: coordinatewise max over each cloud's points.
  std::vector<ValueId> pooled;
  pooled.reserve(static_cast<std::size_t>(clouds));
  for (int i = 0; i < clouds; ++i) {
    pooled.push_back(max_axis(tape, slice(tape, features, 0, i * per_cloud, per_cloud), 0));
  }
  ForwardIds ids;
  ids.representation = concat(tape, pooled, 0);

  ValueId embed = ids.representation;
  for (int l = 0; l < shape_source.projector.depth; ++l) {
    std::string base = "projector.l" + std::to_string(l);
    embed = add(tape, matmul(tape, embed, param(base + ".weight")), param(base + ".bias"));
    if (l + 1 < shape_source.projector.depth) embed = relu(tape, embed);
  }
  ids.embedding = embed;
  return ids;
}

ModelGraph build_model_graph(Tape& tape, const ParameterStore& store, const Matrix& stacked_points, int clouds) {
  ModelGraph graph;
  graph.params.reserve(store.size());
  for (const auto& [name, value] : store.items()) {
    graph.params.push_back(tape.parameter(value, name));
  }
  graph.points = tape.input(NumericArray::from_matrix(stacked_points));
  ForwardIds ids = wire_model_forward(tape, store, graph.params, graph.points, clouds);
  graph.representation = ids.representation;
  graph.embedding = ids.embedding;
  return graph;
}

Matrix encode(const ParameterStore& store, std::span<const PointCloud> batch) {
  if (batch.empty()) throw std::invalid_argument("encode: empty batch");
  const int chunk = 64;  // bounds tape memory; per-row results do not depend on chunking
  Matrix out(static_cast<Eigen::Index>(batch.size()), store.encoder.repr_dim());
  for (std::size_t begin = 0; begin < batch.size(); begin += chunk) {
    std::size_t count = std::min<std::size_t>(chunk, batch.size() - begin);
    Tape tape;
    ModelGraph graph = build_model_graph(tape, store, stack_points(batch.subspan(begin, count)),
                                         static_cast<int>(count));
    out.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(count)) =
        tape.value(graph.representation).mat();
  }
  return out;
}

Matrix project(const ParameterStore& store, const Matrix& representation) {
  if (representation.cols() != store.encoder.repr_dim()) {
    throw std::invalid_argument("project: representation width " + std::to_string(representation.cols()) +
                                " does not match encoder D_h " + std::to_string(store.encoder.repr_dim()));
  }
  if (!representation.allFinite()) throw std::invalid_argument("project: representation must be finite");
  Tape tape;
  ValueId h = tape.input(NumericArray::from_matrix(representation));
  ValueId embed = h;
  for (int l = 0; l < store.projector.depth; ++l) {
    std::string base = "projector.l" + std::to_string(l);
    ValueId w = tape.input(store.at(base + ".weight"));
    ValueId b = tape.input(store.at(base + ".bias"));
    embed = add(tape, matmul(tape, embed, w), b);
    if (l + 1 < store.projector.depth) embed = relu(tape, embed);
  }
  return tape.value(embed).to_matrix();
}

}  // namespace pjem
