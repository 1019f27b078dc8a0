#pragma once

#include <array>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "teggcn/adam.hpp"
#include "teggcn/graph.hpp"
#include "teggcn/tensor.hpp"

namespace teggcn {

struct ModelConfig {
    int num_layers = 2;
    int hidden_dim = 64;
    double dropout_rate = 0.5;
    bool use_degree_scaling = true;  // learn alpha from relative degree; off means alpha = 1
    int classes = 0;                 // filled in from the data
};

// Constant per-graph wiring shared by every forward pass of a run: directed
// non-self edges with their normalized-adjacency coefficients, the same set
// extended by self-loops (used when sign matrices are injected externally),
// relative degrees and the input features (sparse when they are mostly
// zeros).
template <typename T>
struct GraphContext {
    int num_nodes = 0;
    int feature_dim = 0;
    std::shared_ptr<const EdgeList> edges;
    std::shared_ptr<const std::vector<T>> edge_coef;
    std::shared_ptr<const EdgeList> edges_with_self;
    std::shared_ptr<const std::vector<T>> edge_coef_with_self;
    Tensor<T> rel_deg;  // N x 1 constant
    Tensor<T> features_dense;
    std::shared_ptr<const CsrMatrix<T>> features_sparse;  // null on the dense path
};

template <typename T>
GraphContext<T> make_graph_context(const Graph& g, double sparse_threshold = 0.25);

// Test hook: replaces the layer's computed sign matrices (dense N x N,
// including the diagonal), mixing coefficients and degree scaling with fixed
// values.
template <typename T>
struct LayerOverride {
    std::vector<T> s_pos;
    std::vector<T> s_neg;
    std::array<double, 3> beta{1.0 / 3, 1.0 / 3, 1.0 / 3};
    bool alpha_one = true;
};

template <typename T>
struct GgcnLayerParams {
    Tensor<T> weight;
    Tensor<T> bias;
    Tensor<T> beta_raw;  // 1 x 3, softmaxed into the mixing coefficients
    Tensor<T> scale_a;   // degree-scaling affine slope
    Tensor<T> scale_c;   // degree-scaling affine offset
};

// Signed graph convolution stack: an input linear transform plus Elu followed
// by layers that mix the transformed features with positively and negatively
// signed neighbor aggregates. Sign weights are edge cosines of the layer's
// own transformed features, mixing uses softmaxed per-layer scalars, and rows
// are scaled by a softplus of an affine function of the relative degree
// (identity at initialization). The last layer emits the class logits.
template <typename T>
class GgcnModel {
public:
    GgcnModel(ModelConfig cfg, int input_dim, std::mt19937_64& rng);

    const ModelConfig& config() const { return cfg_; }

    // Logits, N x classes. overrides, when given, must hold one entry per
    // layer.
    Tensor<T> forward(Tape<T>& tape, const GraphContext<T>& ctx, bool training,
                      std::mt19937_64& rng,
                      const std::vector<LayerOverride<T>>* overrides = nullptr) const;

    // One convolution step on an explicit input (the forward pass above calls
    // this per layer). Exposed for layer-level tests.
    Tensor<T> layer_forward(Tape<T>& tape, const Tensor<T>& h, int layer,
                            const GraphContext<T>& ctx, bool training, std::mt19937_64& rng,
                            const LayerOverride<T>* override_ = nullptr) const;

    std::vector<ParamRef<T>> param_refs() const;
    std::vector<Tensor<T>> parameters() const;

    std::vector<std::vector<T>> snapshot() const;
    void restore(const std::vector<std::vector<T>>& snap);

    void save_checkpoint(const std::string& path) const;
    void load_checkpoint(const std::string& path);

    const GgcnLayerParams<T>& layer_params(int l) const { return layers_[l]; }
    const Tensor<T>& input_weight() const { return input_weight_; }
    const Tensor<T>& input_bias() const { return input_bias_; }

private:
    ModelConfig cfg_;
    Tensor<T> input_weight_;
    Tensor<T> input_bias_;
    std::vector<GgcnLayerParams<T>> layers_;
};

// Per-node degree scaling alpha = softplus(a * rel_deg + c); differentiable
// in a and c.
template <typename T>
Tensor<T> degree_scaling(Tape<T>& tape, const Tensor<T>& rel_deg, const Tensor<T>& a,
                         const Tensor<T>& c);

// softplus(x) = 1 at initialization: the offset that satisfies it.
double softplus_inverse_one();

// Dense diagnostic view of the signed attention for a given feature matrix:
// S[i,j] = cosine(f_i, f_j) on edges, 0 elsewhere, zero diagonal; split into
// the nonnegative and nonpositive parts.
struct SignMatrices {
    int n = 0;
    std::vector<double> pos;  // N x N
    std::vector<double> neg;
};
SignMatrices sign_matrices(const Graph& g, const std::vector<double>& features, int dim);

extern template class GgcnModel<float>;
extern template class GgcnModel<double>;
extern template GraphContext<float> make_graph_context<float>(const Graph&, double);
extern template GraphContext<double> make_graph_context<double>(const Graph&, double);
extern template Tensor<float> degree_scaling<float>(Tape<float>&, const Tensor<float>&,
                                                    const Tensor<float>&, const Tensor<float>&);
extern template Tensor<double> degree_scaling<double>(Tape<double>&, const Tensor<double>&,
                                                      const Tensor<double>&,
                                                      const Tensor<double>&);

}  // namespace teggcn
