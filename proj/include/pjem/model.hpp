#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pjem/numeric_array.hpp"
#include "pjem/pointcloud.hpp"
#include "pjem/tape.hpp"

namespace pjem {

// Shared per-point MLP widths; the last width is the representation size.
struct EncoderConfig {
  int input_dim = 3;
  std::vector<int> widths{64, 128, 256};

  int repr_dim() const { return widths.back(); }
  void validate() const;
};

// K segments of M entries each; the embedding is their concatenation.
struct SegmentLayout {
  int segments = 16;            // K
  int entries_per_segment = 32;  // M

  int embed_dim() const { return segments * entries_per_segment; }
  void validate() const;
};

struct ProjectorConfig {
  int hidden = 1024;
  int depth = 2;  // number of affine layers; relu between, none after the last

  void validate() const;
};

// Named parameter arrays in a fixed order, plus the configs that shape them.
class ParameterStore {
 public:
  EncoderConfig encoder;
  SegmentLayout layout;
  ProjectorConfig projector;
  std::string config_json;  // resolved run configuration, embedded in checkpoints

  void add(std::string name, NumericArray value);
  NumericArray& at(const std::string& name);
  const NumericArray& at(const std::string& name) const;
  std::size_t size() const { return items_.size(); }
  std::vector<std::pair<std::string, NumericArray>>& items() { return items_; }
  const std::vector<std::pair<std::string, NumericArray>>& items() const { return items_; }

 private:
  std::vector<std::pair<std::string, NumericArray>> items_;
};

// Fan-scaled uniform weights, zero biases; deterministic in the seed.
ParameterStore init_parameters(const EncoderConfig& encoder, const SegmentLayout& layout,
                               const ProjectorConfig& projector, std::uint64_t seed);

// Tape graph from stacked per-point coordinates ((clouds * P) x 3) to the
// pooled representation (clouds x D_h) and the raw embedding (clouds x D_z).
struct ModelGraph {
  std::vector<ValueId> params;  // aligned with ParameterStore::items()
  ValueId points;
  ValueId representation;
  ValueId embedding;
};
ModelGraph build_model_graph(Tape& tape, const ParameterStore& store, const Matrix& stacked_points, int clouds);

// Same wiring over caller-owned leaves; `params` must follow the item order
// of a store shaped like `shape_source` (values are read from the tape).
struct ForwardIds {
  ValueId representation;
  ValueId embedding;
};
ForwardIds wire_model_forward(Tape& tape, const ParameterStore& shape_source, std::span<const ValueId> params,
                              ValueId points, int clouds);

// Plain forward passes (no gradients); bit-identical to the tape route.
Matrix encode(const ParameterStore& store, std::span<const PointCloud> batch);
Matrix project(const ParameterStore& store, const Matrix& representation);

Matrix stack_points(std::span<const PointCloud> batch);  // validates equal point counts

}  // namespace pjem
