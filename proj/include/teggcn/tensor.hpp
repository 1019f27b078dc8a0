#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace teggcn {

// Dense row-major matrix with an optional gradient buffer. Vectors are n x 1,
// scalars 1 x 1. Handles are shared_ptrs so tape closures can keep operands
// alive across the forward pass.
template <typename T>
struct TensorData {
    int rows = 0;
    int cols = 0;
    std::vector<T> value;
    std::vector<T> grad;  // allocated on demand, same size as value
    bool requires_grad = false;
    std::string name;

    size_t size() const { return value.size(); }
    T& at(int r, int c) { return value[static_cast<size_t>(r) * cols + c]; }
    T at(int r, int c) const { return value[static_cast<size_t>(r) * cols + c]; }
    T at_grad(int r, int c) const { return grad[static_cast<size_t>(r) * cols + c]; }
    void ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), T(0));
    }
    void zero_grad() { std::fill(grad.begin(), grad.end(), T(0)); }
};

template <typename T>
using Tensor = std::shared_ptr<TensorData<T>>;

template <typename T>
Tensor<T> make_tensor(int rows, int cols, bool requires_grad = false, std::string name = {}) {
    auto t = std::make_shared<TensorData<T>>();
    t->rows = rows;
    t->cols = cols;
    t->value.assign(static_cast<size_t>(rows) * cols, T(0));
    t->requires_grad = requires_grad;
    t->name = std::move(name);
    if (requires_grad) t->ensure_grad();
    return t;
}

template <typename T>
Tensor<T> tensor_from(std::vector<T> values, int rows, int cols, bool requires_grad = false) {
    if (values.size() != static_cast<size_t>(rows) * cols)
        throw std::invalid_argument("tensor_from: value count does not match shape");
    auto t = make_tensor<T>(rows, cols, requires_grad);
    t->value = std::move(values);
    return t;
}

// Compressed sparse rows; used for constant inputs (features, adjacency
// coefficients) that participate in differentiable products.
template <typename T>
struct CsrMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<int> offsets;  // rows + 1
    std::vector<int> index;
    std::vector<T> values;
};

// Directed aggregation wiring: entry e routes row from[e], scaled by a
// constant coefficient, into row to[e].
struct EdgeList {
    std::vector<int> to;
    std::vector<int> from;
};

namespace detail {
template <typename T>
using EMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapM = Eigen::Map<EMat<T>>;
template <typename T>
using MapC = Eigen::Map<const EMat<T>>;

inline std::string shape_str(int r, int c) {
    return "[" + std::to_string(r) + "x" + std::to_string(c) + "]";
}
}  // namespace detail

// Records the forward pass and replays it in reverse for gradients. One tape
// per forward pass; parameters are leaf tensors created outside any tape.
// A non-recording tape runs the same forward math without bookkeeping
// (evaluation passes).
template <typename T>
class Tape {
public:
    explicit Tape(bool recording = true) : recording_(recording) {}

    bool recording() const { return recording_; }

    void backward(const Tensor<T>& loss) {
        if (loss->rows != 1 || loss->cols != 1)
            throw std::invalid_argument("backward requires a scalar loss, got " +
                                        detail::shape_str(loss->rows, loss->cols));
        loss->ensure_grad();
        loss->grad[0] = T(1);
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
        nodes_.clear();
    }

    // ---- primitives ----

    Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
        if (a->cols != b->rows)
            throw std::invalid_argument("matmul shape mismatch: " +
                                        detail::shape_str(a->rows, a->cols) + " * " +
                                        detail::shape_str(b->rows, b->cols));
        auto out = result(a->rows, b->cols, a, b);
        detail::MapC<T> A(a->value.data(), a->rows, a->cols);
        detail::MapC<T> B(b->value.data(), b->rows, b->cols);
        detail::MapM<T> C(out->value.data(), out->rows, out->cols);
        C.noalias() = A * B;
        record(out, [a, b, out] {
            detail::MapC<T> A(a->value.data(), a->rows, a->cols);
            detail::MapC<T> B(b->value.data(), b->rows, b->cols);
            detail::MapC<T> G(out->grad.data(), out->rows, out->cols);
            if (a->requires_grad) {
                a->ensure_grad();
                detail::MapM<T>(a->grad.data(), a->rows, a->cols).noalias() += G * B.transpose();
            }
            if (b->requires_grad) {
                b->ensure_grad();
                detail::MapM<T>(b->grad.data(), b->rows, b->cols).noalias() += A.transpose() * G;
            }
        });
        return out;
    }

    // Constant sparse left operand; gradient flows into b only.
    Tensor<T> sparse_matmul(std::shared_ptr<const CsrMatrix<T>> a, const Tensor<T>& b) {
        if (a->cols != b->rows)
            throw std::invalid_argument("sparse_matmul shape mismatch: " +
                                        detail::shape_str(a->rows, a->cols) + " * " +
                                        detail::shape_str(b->rows, b->cols));
        auto out = result(a->rows, b->cols, b);
        const int n = b->cols;
        for (int i = 0; i < a->rows; ++i) {
            T* dst = out->value.data() + static_cast<size_t>(i) * n;
            for (int e = a->offsets[i]; e < a->offsets[i + 1]; ++e) {
                const T v = a->values[e];
                const T* src = b->value.data() + static_cast<size_t>(a->index[e]) * n;
                for (int c = 0; c < n; ++c) dst[c] += v * src[c];
            }
        }
        record(out, [a = std::move(a), b, out, n] {
            if (!b->requires_grad) return;
            b->ensure_grad();
            for (int i = 0; i < a->rows; ++i) {
                const T* g = out->grad.data() + static_cast<size_t>(i) * n;
                for (int e = a->offsets[i]; e < a->offsets[i + 1]; ++e) {
                    const T v = a->values[e];
                    T* dst = b->grad.data() + static_cast<size_t>(a->index[e]) * n;
                    for (int c = 0; c < n; ++c) dst[c] += v * g[c];
                }
            }
        });
        return out;
    }

    Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
        check_same_shape("add", a, b);
        auto out = result(a->rows, a->cols, a, b);
        for (size_t i = 0; i < out->size(); ++i) out->value[i] = a->value[i] + b->value[i];
        record(out, [a, b, out] {
            accumulate(a, out->grad);
            accumulate(b, out->grad);
        });
        return out;
    }

    // a + bias broadcast over rows (bias is 1 x cols).
    Tensor<T> add_rowvec(const Tensor<T>& a, const Tensor<T>& bias) {
        if (bias->rows != 1 || bias->cols != a->cols)
            throw std::invalid_argument("add_rowvec shape mismatch: " +
                                        detail::shape_str(a->rows, a->cols) + " + " +
                                        detail::shape_str(bias->rows, bias->cols));
        auto out = result(a->rows, a->cols, a, bias);
        for (int r = 0; r < a->rows; ++r)
            for (int c = 0; c < a->cols; ++c)
                out->at(r, c) = a->at(r, c) + bias->value[c];
        record(out, [a, bias, out] {
            accumulate(a, out->grad);
            if (bias->requires_grad) {
                bias->ensure_grad();
                for (int r = 0; r < out->rows; ++r)
                    for (int c = 0; c < out->cols; ++c) bias->grad[c] += out->at_grad(r, c);
            }
        });
        return out;
    }

    // a with v[i] added to every entry of row i (v is rows x 1).
    Tensor<T> add_rowscalar(const Tensor<T>& a, const Tensor<T>& v) {
        check_colvec("add_rowscalar", a, v);
        auto out = result(a->rows, a->cols, a, v);
        for (int r = 0; r < a->rows; ++r)
            for (int c = 0; c < a->cols; ++c) out->at(r, c) = a->at(r, c) + v->value[r];
        record(out, [a, v, out] {
            accumulate(a, out->grad);
            if (v->requires_grad) {
                v->ensure_grad();
                for (int r = 0; r < out->rows; ++r)
                    for (int c = 0; c < out->cols; ++c) v->grad[r] += out->at_grad(r, c);
            }
        });
        return out;
    }

    // a + s broadcast everywhere (s is 1 x 1).
    Tensor<T> add_scalar(const Tensor<T>& a, const Tensor<T>& s) {
        check_scalar("add_scalar", s);
        auto out = result(a->rows, a->cols, a, s);
        for (size_t i = 0; i < out->size(); ++i) out->value[i] = a->value[i] + s->value[0];
        record(out, [a, s, out] {
            accumulate(a, out->grad);
            if (s->requires_grad) {
                s->ensure_grad();
                T g = 0;
                for (T x : out->grad) g += x;
                s->grad[0] += g;
            }
        });
        return out;
    }

    Tensor<T> scale(const Tensor<T>& a, double factor) {
        auto out = result(a->rows, a->cols, a);
        const T f = static_cast<T>(factor);
        for (size_t i = 0; i < out->size(); ++i) out->value[i] = f * a->value[i];
        record(out, [a, out, f] {
            if (!a->requires_grad) return;
            a->ensure_grad();
            for (size_t i = 0; i < out->grad.size(); ++i) a->grad[i] += f * out->grad[i];
        });
        return out;
    }

    Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
        check_same_shape("mul", a, b);
        auto out = result(a->rows, a->cols, a, b);
        for (size_t i = 0; i < out->size(); ++i) out->value[i] = a->value[i] * b->value[i];
        record(out, [a, b, out] {
            if (a->requires_grad) {
                a->ensure_grad();
                for (size_t i = 0; i < out->grad.size(); ++i)
                    a->grad[i] += b->value[i] * out->grad[i];
            }
            if (b->requires_grad) {
                b->ensure_grad();
                for (size_t i = 0; i < out->grad.size(); ++i)
                    b->grad[i] += a->value[i] * out->grad[i];
            }
        });
        return out;
    }

    // out = s * a where s is 1 x 1.
    Tensor<T> scalar_mul(const Tensor<T>& a, const Tensor<T>& s) {
        check_scalar("scalar_mul", s);
        auto out = result(a->rows, a->cols, a, s);
        const T sv = s->value[0];
        for (size_t i = 0; i < out->size(); ++i) out->value[i] = sv * a->value[i];
        record(out, [a, s, out] {
            if (a->requires_grad) {
                a->ensure_grad();
                const T sv = s->value[0];
                for (size_t i = 0; i < out->grad.size(); ++i) a->grad[i] += sv * out->grad[i];
            }
            if (s->requires_grad) {
                s->ensure_grad();
                T g = 0;
                for (size_t i = 0; i < out->grad.size(); ++i) g += a->value[i] * out->grad[i];
                s->grad[0] += g;
            }
        });
        return out;
    }

    Tensor<T> transpose(const Tensor<T>& a) {
        auto out = result(a->cols, a->rows, a);
        for (int r = 0; r < a->rows; ++r)
            for (int c = 0; c < a->cols; ++c) out->at(c, r) = a->at(r, c);
        record(out, [a, out] {
            if (!a->requires_grad) return;
            a->ensure_grad();
            for (int r = 0; r < out->rows; ++r)
                for (int c = 0; c < out->cols; ++c) a->grad[static_cast<size_t>(c) * a->cols + r] += out->at_grad(r, c);
        });
        return out;
    }

    // Row i multiplied by v[i] (v is rows x 1).
    Tensor<T> row_scale(const Tensor<T>& a, const Tensor<T>& v) {
        check_colvec("row_scale", a, v);
        auto out = result(a->rows, a->cols, a, v);
        for (int r = 0; r < a->rows; ++r)
            for (int c = 0; c < a->cols; ++c) out->at(r, c) = a->at(r, c) * v->value[r];
        record(out, [a, v, out] {
            if (a->requires_grad) {
                a->ensure_grad();
                for (int r = 0; r < out->rows; ++r)
                    for (int c = 0; c < out->cols; ++c)
                        a->grad[static_cast<size_t>(r) * a->cols + c] +=
                            v->value[r] * out->at_grad(r, c);
            }
            if (v->requires_grad) {
                v->ensure_grad();
                for (int r = 0; r < out->rows; ++r) {
                    T g = 0;
                    for (int c = 0; c < out->cols; ++c) g += a->at(r, c) * out->at_grad(r, c);
                    v->grad[r] += g;
                }
            }
        });
        return out;
    }

    // 1 x 1 view of entry (r, c).
    Tensor<T> select(const Tensor<T>& a, int r, int c) {
        if (r < 0 || r >= a->rows || c < 0 || c >= a->cols)
            throw std::invalid_argument("select index out of range");
        auto out = result(1, 1, a);
        out->value[0] = a->at(r, c);
        record(out, [a, out, r, c] {
            if (!a->requires_grad) return;
            a->ensure_grad();
            a->grad[static_cast<size_t>(r) * a->cols + c] += out->grad[0];
        });
        return out;
    }

    Tensor<T> gather_rows(const Tensor<T>& a, std::vector<int> rows) {
        for (int r : rows)
            if (r < 0 || r >= a->rows) throw std::invalid_argument("gather_rows index out of range");
        auto out = result(static_cast<int>(rows.size()), a->cols, a);
        for (size_t i = 0; i < rows.size(); ++i)
            std::copy_n(a->value.data() + static_cast<size_t>(rows[i]) * a->cols, a->cols,
                        out->value.data() + i * a->cols);
        record(out, [a, out, rows = std::move(rows)] {
            if (!a->requires_grad) return;
            a->ensure_grad();
            for (size_t i = 0; i < rows.size(); ++i) {
                T* dst = a->grad.data() + static_cast<size_t>(rows[i]) * a->cols;
                const T* g = out->grad.data() + i * a->cols;
                for (int c = 0; c < a->cols; ++c) dst[c] += g[c];
            }
        });
        return out;
    }

    // out[to[e]] += w[e] * coef[e] * h[from[e]] over all wiring entries.
    // w is E x 1; coef is a constant per-entry factor. Wiring is shared so the
    // backward closure can outlive the caller's frame.
    Tensor<T> edge_aggregate(const Tensor<T>& w, const Tensor<T>& h,
                             std::shared_ptr<const EdgeList> edges,
                             std::shared_ptr<const std::vector<T>> coef, int out_rows) {
        const size_t ne = edges->to.size();
        if (edges->from.size() != ne || coef->size() != ne)
            throw std::invalid_argument("edge_aggregate wiring arrays differ in length");
        if (w->rows != static_cast<int>(ne) || w->cols != 1)
            throw std::invalid_argument("edge_aggregate weight shape mismatch");
        auto out = result(out_rows, h->cols, w, h);
        const int n = h->cols;
        for (size_t e = 0; e < ne; ++e) {
            const T f = w->value[e] * (*coef)[e];
            const T* src = h->value.data() + static_cast<size_t>(edges->from[e]) * n;
            T* dst = out->value.data() + static_cast<size_t>(edges->to[e]) * n;
            for (int c = 0; c < n; ++c) dst[c] += f * src[c];
        }
        record(out, [w, h, out, edges = std::move(edges), coef = std::move(coef), n] {
            const size_t ne = edges->to.size();
            if (w->requires_grad) w->ensure_grad();
            if (h->requires_grad) h->ensure_grad();
            for (size_t e = 0; e < ne; ++e) {
                const T* g = out->grad.data() + static_cast<size_t>(edges->to[e]) * n;
                const T* src = h->value.data() + static_cast<size_t>(edges->from[e]) * n;
                if (w->requires_grad) {
                    T acc = 0;
                    for (int c = 0; c < n; ++c) acc += g[c] * src[c];
                    w->grad[e] += (*coef)[e] * acc;
                }
                if (h->requires_grad) {
                    const T f = w->value[e] * (*coef)[e];
                    T* dst = h->grad.data() + static_cast<size_t>(edges->from[e]) * n;
                    for (int c = 0; c < n; ++c) dst[c] += f * g[c];
                }
            }
        });
        return out;
    }

    Tensor<T> relu(const Tensor<T>& a) {
        auto out = result(a->rows, a->cols, a);
        for (size_t i = 0; i < out->size(); ++i) out->value[i] = std::max(a->value[i], T(0));
        record(out, [a, out] {
            if (!a->requires_grad) return;
            a->ensure_grad();
            for (size_t i = 0; i < out->grad.size(); ++i)
                if (a->value[i] > T(0)) a->grad[i] += out->grad[i];
        });
        return out;
    }

    // min(x, 0): the negative part kept with its sign.
    Tensor<T> negpart(const Tensor<T>& a) {
        auto out = result(a->rows, a->cols, a);
        for (size_t i = 0; i < out->size(); ++i) out->value[i] = std::min(a->value[i], T(0));
        record(out, [a, out] {
            if (!a->requires_grad) return;
            a->ensure_grad();
            for (size_t i = 0; i < out->grad.size(); ++i)
                if (a->value[i] < T(0)) a->grad[i] += out->grad[i];
        });
        return out;
    }

    Tensor<T> elu(const Tensor<T>& a) {
        auto out = result(a->rows, a->cols, a);
        for (size_t i = 0; i < out->size(); ++i) {
            const T x = a->value[i];
            out->value[i] = x > T(0) ? x : std::expm1(x);
        }
        record(out, [a, out] {
            if (!a->requires_grad) return;
            a->ensure_grad();
            for (size_t i = 0; i < out->grad.size(); ++i) {
                const T x = a->value[i];
                a->grad[i] += out->grad[i] * (x > T(0) ? T(1) : out->value[i] + T(1));
            }
        });
        return out;
    }

    Tensor<T> softplus(const Tensor<T>& a) {
        auto out = result(a->rows, a->cols, a);
        for (size_t i = 0; i < out->size(); ++i) {
            const T x = a->value[i];
            out->value[i] = std::max(x, T(0)) + std::log1p(std::exp(-std::abs(x)));
        }
        record(out, [a, out] {
            if (!a->requires_grad) return;
            a->ensure_grad();
            for (size_t i = 0; i < out->grad.size(); ++i) {
                const T x = a->value[i];
                const T sig = T(1) / (T(1) + std::exp(-x));
                a->grad[i] += out->grad[i] * sig;
            }
        });
        return out;
    }

    Tensor<T> row_softmax(const Tensor<T>& a) {
        auto out = result(a->rows, a->cols, a);
        for (int r = 0; r < a->rows; ++r) {
            T mx = -std::numeric_limits<T>::infinity();
            for (int c = 0; c < a->cols; ++c) mx = std::max(mx, a->at(r, c));
            if (!(mx > -std::numeric_limits<T>::infinity()))
                throw std::invalid_argument("row_softmax: row " + std::to_string(r) +
                                            " has no finite entries");
            T sum = 0;
            for (int c = 0; c < a->cols; ++c) {
                out->at(r, c) = std::exp(a->at(r, c) - mx);
                sum += out->at(r, c);
            }
            for (int c = 0; c < a->cols; ++c) out->at(r, c) /= sum;
        }
        record(out, [a, out] {
            if (!a->requires_grad) return;
            a->ensure_grad();
            for (int r = 0; r < out->rows; ++r) {
                T dot = 0;
                for (int c = 0; c < out->cols; ++c) dot += out->at_grad(r, c) * out->at(r, c);
                for (int c = 0; c < out->cols; ++c)
                    a->grad[static_cast<size_t>(r) * a->cols + c] +=
                        out->at(r, c) * (out->at_grad(r, c) - dot);
            }
        });
        return out;
    }

    // Inverted dropout; identity when not training. Mask draws come from rng.
    Tensor<T> dropout(const Tensor<T>& a, double rate, bool training, std::mt19937_64& rng) {
        if (rate < 0.0 || rate >= 1.0)
            throw std::invalid_argument("dropout rate must lie in [0, 1)");
        if (!training || rate == 0.0) return a;
        auto out = result(a->rows, a->cols, a);
        auto mask = std::make_shared<std::vector<T>>(out->size());
        const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (size_t i = 0; i < out->size(); ++i) {
            (*mask)[i] = unif(rng) < rate ? T(0) : keep_scale;
            out->value[i] = a->value[i] * (*mask)[i];
        }
        record(out, [a, out, mask] {
            if (!a->requires_grad) return;
            a->ensure_grad();
            for (size_t i = 0; i < out->grad.size(); ++i)
                a->grad[i] += out->grad[i] * (*mask)[i];
        });
        return out;
    }

    // Row-wise cosine similarity of two equally shaped matrices; zero rows
    // yield similarity 0 with zero gradient.
    Tensor<T> cosine_rows(const Tensor<T>& a, const Tensor<T>& b) {
        check_same_shape("cosine_rows", a, b);
        auto out = result(a->rows, 1, a, b);
        constexpr T kEps = static_cast<T>(1e-12);
        for (int r = 0; r < a->rows; ++r) {
            T dot = 0, na = 0, nb = 0;
            for (int c = 0; c < a->cols; ++c) {
                dot += a->at(r, c) * b->at(r, c);
                na += a->at(r, c) * a->at(r, c);
                nb += b->at(r, c) * b->at(r, c);
            }
            const T denom = std::sqrt(na) * std::sqrt(nb);
            out->value[r] = denom > kEps ? dot / denom : T(0);
        }
        record(out, [a, b, out] {
            constexpr T kEps = static_cast<T>(1e-12);
            for (int r = 0; r < a->rows; ++r) {
                const T g = out->grad[r];
                if (g == T(0)) continue;
                T dot = 0, na2 = 0, nb2 = 0;
                for (int c = 0; c < a->cols; ++c) {
                    dot += a->at(r, c) * b->at(r, c);
                    na2 += a->at(r, c) * a->at(r, c);
                    nb2 += b->at(r, c) * b->at(r, c);
                }
                const T na = std::sqrt(na2), nb = std::sqrt(nb2);
                if (na * nb <= kEps) continue;
                const T inv = T(1) / (na * nb);
                const T cosv = dot * inv;
                if (a->requires_grad) {
                    a->ensure_grad();
                    for (int c = 0; c < a->cols; ++c)
                        a->grad[static_cast<size_t>(r) * a->cols + c] +=
                            g * (b->at(r, c) * inv - cosv * a->at(r, c) / na2);
                }
                if (b->requires_grad) {
                    b->ensure_grad();
                    for (int c = 0; c < b->cols; ++c)
                        b->grad[static_cast<size_t>(r) * b->cols + c] +=
                            g * (a->at(r, c) * inv - cosv * b->at(r, c) / nb2);
                }
            }
        });
        return out;
    }

    // Mean negative log-likelihood over masked rows, with the softmax fused
    // in. labels[r] must be a valid class for every masked row.
    Tensor<T> cross_entropy_masked(const Tensor<T>& logits, std::span<const int> labels,
                                   std::span<const uint8_t> mask) {
        if (labels.size() != static_cast<size_t>(logits->rows) ||
            mask.size() != static_cast<size_t>(logits->rows))
            throw std::invalid_argument("cross_entropy_masked: labels/mask size mismatch");
        int m = 0;
        for (uint8_t b : mask) m += b ? 1 : 0;
        if (m == 0) throw std::invalid_argument("cross_entropy_masked: empty mask");
        auto out = result(1, 1, logits);
        double loss = 0.0;
        for (int r = 0; r < logits->rows; ++r) {
            if (!mask[r]) continue;
            if (labels[r] < 0 || labels[r] >= logits->cols)
                throw std::invalid_argument("cross_entropy_masked: label out of range at row " +
                                            std::to_string(r));
            T mx = logits->at(r, 0);
            for (int c = 1; c < logits->cols; ++c) mx = std::max(mx, logits->at(r, c));
            double sum = 0.0;
            for (int c = 0; c < logits->cols; ++c)
                sum += std::exp(static_cast<double>(logits->at(r, c) - mx));
            loss += std::log(sum) + mx - logits->at(r, labels[r]);
        }
        out->value[0] = static_cast<T>(loss / m);
        record(out, [logits, out, labels = std::vector<int>(labels.begin(), labels.end()),
                     mask = std::vector<uint8_t>(mask.begin(), mask.end()), m] {
            if (!logits->requires_grad) return;
            logits->ensure_grad();
            const T g = out->grad[0] / static_cast<T>(m);
            for (int r = 0; r < logits->rows; ++r) {
                if (!mask[r]) continue;
                T mx = logits->at(r, 0);
                for (int c = 1; c < logits->cols; ++c) mx = std::max(mx, logits->at(r, c));
                double sum = 0.0;
                for (int c = 0; c < logits->cols; ++c)
                    sum += std::exp(static_cast<double>(logits->at(r, c) - mx));
                for (int c = 0; c < logits->cols; ++c) {
                    const T p = static_cast<T>(
                        std::exp(static_cast<double>(logits->at(r, c) - mx)) / sum);
                    logits->grad[static_cast<size_t>(r) * logits->cols + c] +=
                        g * (p - (c == labels[r] ? T(1) : T(0)));
                }
            }
        });
        return out;
    }

private:
    template <typename... Inputs>
    Tensor<T> result(int rows, int cols, const Inputs&... inputs) {
        bool rg = recording_ && (... || inputs->requires_grad);
        return make_tensor<T>(rows, cols, rg);
    }

    void record(const Tensor<T>& out, std::function<void()> fn) {
        if (recording_ && out->requires_grad) nodes_.push_back(std::move(fn));
    }

    static void accumulate(const Tensor<T>& t, const std::vector<T>& g) {
        if (!t->requires_grad) return;
        t->ensure_grad();
        for (size_t i = 0; i < g.size(); ++i) t->grad[i] += g[i];
    }

    static void check_same_shape(const char* op, const Tensor<T>& a, const Tensor<T>& b) {
        if (a->rows != b->rows || a->cols != b->cols)
            throw std::invalid_argument(std::string(op) + " shape mismatch: " +
                                        detail::shape_str(a->rows, a->cols) + " vs " +
                                        detail::shape_str(b->rows, b->cols));
    }
    static void check_colvec(const char* op, const Tensor<T>& a, const Tensor<T>& v) {
        if (v->rows != a->rows || v->cols != 1)
            throw std::invalid_argument(std::string(op) + " expects a column vector matching " +
                                        detail::shape_str(a->rows, a->cols) + ", got " +
                                        detail::shape_str(v->rows, v->cols));
    }
    static void check_scalar(const char* op, const Tensor<T>& s) {
        if (s->rows != 1 || s->cols != 1)
            throw std::invalid_argument(std::string(op) + " expects a 1x1 scalar, got " +
                                        detail::shape_str(s->rows, s->cols));
    }

    bool recording_;
    std::vector<std::function<void()>> nodes_;
};

}  // namespace teggcn
