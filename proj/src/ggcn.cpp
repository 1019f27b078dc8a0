#include "teggcn/ggcn.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace teggcn {

double softplus_inverse_one() { return std::log(std::exp(1.0) - 1.0); }

template <typename T>
GraphContext<T> make_graph_context(const Graph& g, double sparse_threshold) {
    GraphContext<T> ctx;
    ctx.num_nodes = g.num_nodes;
    ctx.feature_dim = g.feature_dim;

    auto edges = std::make_shared<EdgeList>();
    auto coef = std::make_shared<std::vector<T>>();
    edges->to.reserve(g.edges.size());
    edges->from.reserve(g.edges.size());
    coef->reserve(g.edges.size());
    for (const auto& [u, v] : g.edges) {
        edges->to.push_back(u);
        edges->from.push_back(v);
        coef->push_back(static_cast<T>(1.0 / std::sqrt((g.degrees[u] + 1.0) *
                                                       (g.degrees[v] + 1.0))));
    }
    auto edges_self = std::make_shared<EdgeList>(*edges);
    auto coef_self = std::make_shared<std::vector<T>>(*coef);
    for (int i = 0; i < g.num_nodes; ++i) {
        edges_self->to.push_back(i);
        edges_self->from.push_back(i);
        coef_self->push_back(static_cast<T>(1.0 / (g.degrees[i] + 1.0)));
    }
    ctx.edges = std::move(edges);
    ctx.edge_coef = std::move(coef);
    ctx.edges_with_self = std::move(edges_self);
    ctx.edge_coef_with_self = std::move(coef_self);

    auto rd = relative_degrees(g);
    ctx.rel_deg = make_tensor<T>(g.num_nodes, 1, false);
    for (int i = 0; i < g.num_nodes; ++i) ctx.rel_deg->value[i] = static_cast<T>(rd.values[i]);

    size_t nnz = 0;
    for (double x : g.features) nnz += x != 0.0;
    const bool sparse =
        !g.features.empty() && static_cast<double>(nnz) / g.features.size() < sparse_threshold;
    if (sparse) {
        auto csr = std::make_shared<CsrMatrix<T>>();
        csr->rows = g.num_nodes;
        csr->cols = g.feature_dim;
        csr->offsets.assign(g.num_nodes + 1, 0);
        csr->index.reserve(nnz);
        csr->values.reserve(nnz);
        for (int i = 0; i < g.num_nodes; ++i) {
            auto row = g.feature_row(i);
            for (int j = 0; j < g.feature_dim; ++j) {
                if (row[j] == 0.0) continue;
                csr->index.push_back(j);
                csr->values.push_back(static_cast<T>(row[j]));
            }
            csr->offsets[i + 1] = static_cast<int>(csr->index.size());
        }
        ctx.features_sparse = std::move(csr);
    } else {
        ctx.features_dense = make_tensor<T>(g.num_nodes, g.feature_dim, false);
        for (size_t i = 0; i < g.features.size(); ++i)
            ctx.features_dense->value[i] = static_cast<T>(g.features[i]);
    }
    return ctx;
}

template <typename T>
Tensor<T> degree_scaling(Tape<T>& tape, const Tensor<T>& rel_deg, const Tensor<T>& a,
                         const Tensor<T>& c) {
    return tape.softplus(tape.add_scalar(tape.scalar_mul(rel_deg, a), c));
}

namespace {

template <typename T>
void init_uniform_fanin(Tensor<T>& t, int fan_in, std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (auto& v : t->value) v = static_cast<T>(u(rng));
}

}  // namespace

template <typename T>
GgcnModel<T>::GgcnModel(ModelConfig cfg, int input_dim, std::mt19937_64& rng) : cfg_(cfg) {
    if (cfg_.num_layers < 1) throw std::invalid_argument("num_layers must be >= 1");
    if (cfg_.classes < 1) throw std::invalid_argument("classes must be set before construction");
    if (cfg_.hidden_dim < 1) throw std::invalid_argument("hidden_dim must be >= 1");

    input_weight_ = make_tensor<T>(input_dim, cfg_.hidden_dim, true, "input.weight");
    init_uniform_fanin(input_weight_, input_dim, rng);
    input_bias_ = make_tensor<T>(1, cfg_.hidden_dim, true, "input.bias");

    layers_.resize(cfg_.num_layers);
    for (int l = 0; l < cfg_.num_layers; ++l) {
        const int in = cfg_.hidden_dim;
        const int out = l + 1 == cfg_.num_layers ? cfg_.classes : cfg_.hidden_dim;
        const std::string prefix = "layers." + std::to_string(l) + ".";
        auto& p = layers_[l];
        p.weight = make_tensor<T>(in, out, true, prefix + "weight");
        init_uniform_fanin(p.weight, in, rng);
        p.bias = make_tensor<T>(1, out, true, prefix + "bias");
        p.beta_raw = make_tensor<T>(1, 3, true, prefix + "beta");
        p.scale_a = make_tensor<T>(1, 1, true, prefix + "scale_a");
        p.scale_c = make_tensor<T>(1, 1, true, prefix + "scale_c");
        p.scale_c->value[0] = static_cast<T>(softplus_inverse_one());
    }
}

template <typename T>
Tensor<T> GgcnModel<T>::layer_forward(Tape<T>& tape, const Tensor<T>& h, int layer,
                                      const GraphContext<T>& ctx, bool training,
                                      std::mt19937_64& rng,
                                      const LayerOverride<T>* override_) const {
    const auto& p = layers_[layer];
    Tensor<T> hin = tape.dropout(h, cfg_.dropout_rate, training, rng);
    Tensor<T> hhat = tape.add_rowvec(tape.matmul(hin, p.weight), p.bias);

    const int n = ctx.num_nodes;
    Tensor<T> prop_pos, prop_neg;
    if (override_ == nullptr) {
        // Per-edge signs from the layer's own transformed features; the
        // diagonal of the sign matrix is zero, so self-loops never propagate
        // here (the beta_0 term carries the node's own contribution).
        auto rows_i = tape.gather_rows(hhat, ctx.edges->to);
        auto rows_j = tape.gather_rows(hhat, ctx.edges->from);
        auto sign = tape.cosine_rows(rows_i, rows_j);
        auto s_pos = tape.relu(sign);
        auto s_neg = tape.negpart(sign);
        prop_pos = tape.edge_aggregate(s_pos, hhat, ctx.edges, ctx.edge_coef, n);
        prop_neg = tape.edge_aggregate(s_neg, hhat, ctx.edges, ctx.edge_coef, n);
    } else {
        if (override_->s_pos.size() != static_cast<size_t>(n) * n ||
            override_->s_neg.size() != static_cast<size_t>(n) * n)
            throw std::invalid_argument("override sign matrices must be dense N x N");
        const auto& wiring = *ctx.edges_with_self;
        const size_t ne = wiring.to.size();
        auto s_pos = make_tensor<T>(static_cast<int>(ne), 1, false);
        auto s_neg = make_tensor<T>(static_cast<int>(ne), 1, false);
        for (size_t e = 0; e < ne; ++e) {
            const size_t idx =
                static_cast<size_t>(wiring.to[e]) * n + static_cast<size_t>(wiring.from[e]);
            s_pos->value[e] = override_->s_pos[idx];
            s_neg->value[e] = override_->s_neg[idx];
        }
        prop_pos =
            tape.edge_aggregate(s_pos, hhat, ctx.edges_with_self, ctx.edge_coef_with_self, n);
        prop_neg =
            tape.edge_aggregate(s_neg, hhat, ctx.edges_with_self, ctx.edge_coef_with_self, n);
    }

    Tensor<T> mixed;
    if (override_ == nullptr) {
        auto beta = tape.row_softmax(p.beta_raw);
        auto b0 = tape.select(beta, 0, 0);
        auto b1 = tape.select(beta, 0, 1);
        auto b2 = tape.select(beta, 0, 2);
        mixed = tape.add(tape.add(tape.scalar_mul(hhat, b0), tape.scalar_mul(prop_pos, b1)),
                         tape.scalar_mul(prop_neg, b2));
    } else {
        mixed = tape.add(tape.add(tape.scale(hhat, override_->beta[0]),
                                  tape.scale(prop_pos, override_->beta[1])),
                         tape.scale(prop_neg, override_->beta[2]));
    }

    const bool scale_rows = override_ ? !override_->alpha_one : cfg_.use_degree_scaling;
    if (scale_rows) {
        auto alpha = degree_scaling(tape, ctx.rel_deg, p.scale_a, p.scale_c);
        mixed = tape.row_scale(mixed, alpha);
    }
    return tape.elu(mixed);
}

template <typename T>
Tensor<T> GgcnModel<T>::forward(Tape<T>& tape, const GraphContext<T>& ctx, bool training,
                                std::mt19937_64& rng,
                                const std::vector<LayerOverride<T>>* overrides) const {
    if (overrides && static_cast<int>(overrides->size()) != cfg_.num_layers)
        throw std::invalid_argument("override count does not match layer count");
    Tensor<T> h = ctx.features_sparse
                      ? tape.sparse_matmul(ctx.features_sparse, input_weight_)
                      : tape.matmul(ctx.features_dense, input_weight_);
    h = tape.elu(tape.add_rowvec(h, input_bias_));
    for (int l = 0; l < cfg_.num_layers; ++l)
        h = layer_forward(tape, h, l, ctx, training, rng,
                          overrides ? &(*overrides)[l] : nullptr);
    return h;
}

template <typename T>
std::vector<ParamRef<T>> GgcnModel<T>::param_refs() const {
    std::vector<ParamRef<T>> refs;
    refs.push_back({input_weight_, true});
    refs.push_back({input_bias_, false});
    for (const auto& p : layers_) {
        refs.push_back({p.weight, true});
        refs.push_back({p.bias, false});
        refs.push_back({p.beta_raw, false});
        refs.push_back({p.scale_a, false});
        refs.push_back({p.scale_c, false});
    }
    return refs;
}

template <typename T>
std::vector<Tensor<T>> GgcnModel<T>::parameters() const {
    std::vector<Tensor<T>> out;
    for (auto& r : param_refs()) out.push_back(r.tensor);
    return out;
}

template <typename T>
std::vector<std::vector<T>> GgcnModel<T>::snapshot() const {
    std::vector<std::vector<T>> snap;
    for (auto& t : parameters()) snap.push_back(t->value);
    return snap;
}

template <typename T>
void GgcnModel<T>::restore(const std::vector<std::vector<T>>& snap) {
    auto params = parameters();
    if (snap.size() != params.size())
        throw std::invalid_argument("snapshot does not match parameter count");
    for (size_t i = 0; i < params.size(); ++i) {
        if (snap[i].size() != params[i]->value.size())
            throw std::invalid_argument("snapshot shape mismatch for " + params[i]->name);
        params[i]->value = snap[i];
    }
}

namespace {

constexpr char kCheckpointMagic[8] = {'T', 'E', 'G', 'G', 'C', 'N', 'v', '1'};

template <typename V>
void write_pod(std::ofstream& out, const V& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(V));
}

template <typename V>
V read_pod(std::ifstream& in) {
    V v;
    in.read(reinterpret_cast<char*>(&v), sizeof(V));
    if (!in) throw std::runtime_error("checkpoint truncated");
    return v;
}

}  // namespace

template <typename T>
void GgcnModel<T>::save_checkpoint(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open checkpoint file '" + path + "' for writing");
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    auto params = parameters();
    write_pod(out, static_cast<uint32_t>(params.size()));
    for (const auto& t : params) {
        write_pod(out, static_cast<uint32_t>(t->name.size()));
        out.write(t->name.data(), static_cast<std::streamsize>(t->name.size()));
        write_pod(out, static_cast<uint8_t>(sizeof(T)));
        write_pod(out, static_cast<uint32_t>(t->rows));
        write_pod(out, static_cast<uint32_t>(t->cols));
        out.write(reinterpret_cast<const char*>(t->value.data()),
                  static_cast<std::streamsize>(t->value.size() * sizeof(T)));
    }
    if (!out) throw std::runtime_error("failed writing checkpoint '" + path + "'");
}

template <typename T>
void GgcnModel<T>::load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint file '" + path + "'");
    char magic[sizeof(kCheckpointMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
        throw std::runtime_error("'" + path + "' is not a checkpoint file");
    const auto count = read_pod<uint32_t>(in);
    auto params = parameters();
    if (count != params.size())
        throw std::runtime_error("checkpoint holds " + std::to_string(count) +
                                 " tensors, model has " + std::to_string(params.size()));
    for (auto& t : params) {
        const auto name_len = read_pod<uint32_t>(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (name != t->name)
            throw std::runtime_error("checkpoint tensor '" + name + "' does not match model's '" +
                                     t->name + "'");
        const auto width = read_pod<uint8_t>(in);
        if (width != sizeof(T))
            throw std::runtime_error("checkpoint precision differs from the model's");
        const auto rows = read_pod<uint32_t>(in);
        const auto cols = read_pod<uint32_t>(in);
        if (rows != static_cast<uint32_t>(t->rows) || cols != static_cast<uint32_t>(t->cols))
            throw std::runtime_error("checkpoint shape mismatch for '" + name + "'");
        in.read(reinterpret_cast<char*>(t->value.data()),
                static_cast<std::streamsize>(t->value.size() * sizeof(T)));
        if (!in) throw std::runtime_error("checkpoint truncated in '" + name + "'");
    }
}

SignMatrices sign_matrices(const Graph& g, const std::vector<double>& features, int dim) {
    if (features.size() != static_cast<size_t>(g.num_nodes) * dim)
        throw std::invalid_argument("sign_matrices: feature matrix shape mismatch");
    SignMatrices s;
    s.n = g.num_nodes;
    s.pos.assign(static_cast<size_t>(g.num_nodes) * g.num_nodes, 0.0);
    s.neg.assign(static_cast<size_t>(g.num_nodes) * g.num_nodes, 0.0);
    std::vector<double> norms(g.num_nodes, 0.0);
    for (int i = 0; i < g.num_nodes; ++i) {
        double acc = 0;
        for (int j = 0; j < dim; ++j) {
            const double v = features[static_cast<size_t>(i) * dim + j];
            acc += v * v;
        }
        norms[i] = std::sqrt(acc);
    }
    for (const auto& [i, j] : g.edges) {
        const double denom = norms[i] * norms[j];
        if (denom <= 1e-12) continue;
        double dot = 0;
        for (int d = 0; d < dim; ++d)
            dot += features[static_cast<size_t>(i) * dim + d] *
                   features[static_cast<size_t>(j) * dim + d];
        const double c = dot / denom;
        const size_t idx = static_cast<size_t>(i) * g.num_nodes + j;
        if (c >= 0.0)
            s.pos[idx] = c;
        else
            s.neg[idx] = c;
    }
    return s;
}

template class GgcnModel<float>;
template class GgcnModel<double>;
template GraphContext<float> make_graph_context<float>(const Graph&, double);
template GraphContext<double> make_graph_context<double>(const Graph&, double);
template Tensor<float> degree_scaling<float>(Tape<float>&, const Tensor<float>&,
                                             const Tensor<float>&, const Tensor<float>&);
template Tensor<double> degree_scaling<double>(Tape<double>&, const Tensor<double>&,
                                               const Tensor<double>&, const Tensor<double>&);

}  // namespace teggcn
