#include "senca/autograd.hpp"

#include <cassert>
#include <memory>
#include <utility>

#include "senca/error.hpp"
#include "senca/kernels.hpp"
#include "senca/rng.hpp"

namespace senca {

Value Tape::push(Tensor value, bool requires_grad,
                 std::function<void(Tape&, const Tensor&)> back) {
    nodes_.push_back(Node{std::move(value), requires_grad, std::move(back)});
    return Value{static_cast<int>(nodes_.size()) - 1};
}

Value Tape::constant(Tensor v) { return push(std::move(v), false, {}); }

Value Tape::param(Tensor v) { return push(std::move(v), true, {}); }

Tensor& Tape::grad_buf(int id) {
    if (!grad_set_[id]) {
        grads_[id] = Tensor(nodes_[id].value.rows(), nodes_[id].value.cols());
        grad_set_[id] = 1;
    }
    return grads_[id];
}

void Tape::add_grad(int id, const Tensor& g) {
    Tensor& buf = grad_buf(id);
    kern::acc(g.data(), buf.data(), buf.size());
}

Tensor Tape::grad(Value v) const {
    if (static_cast<size_t>(v.id) < grad_set_.size() && grad_set_[v.id]) return grads_[v.id];
    return Tensor(nodes_[v.id].value.rows(), nodes_[v.id].value.cols());
}

void Tape::clear() {
    nodes_.clear();
    grads_.clear();
    grad_set_.clear();
}

void Tape::backward(Value loss) {
    const Tensor& lv = nodes_[loss.id].value;
    if (lv.rows() != 1 || lv.cols() != 1) {
        throw ShapeError("backward: loss must be scalar, got " + lv.shape_str());
    }
    grads_.assign(nodes_.size(), Tensor());
    grad_set_.assign(nodes_.size(), 0);
    grad_buf(loss.id)[0] = 1.0;
    for (int id = loss.id; id >= 0; --id) {
        if (!grad_set_[id] || !nodes_[id].requires_grad) continue;
        if (nodes_[id].backward) nodes_[id].backward(*this, grads_[id]);
    }
}

Value Tape::matmul(Value a, Value b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    if (av.cols() != bv.rows()) {
        throw ShapeError("matmul: inner dimensions disagree, " + av.shape_str() + " * " +
                         bv.shape_str());
    }
    Tensor out(av.rows(), bv.cols());
    kern::matmul_nn(av.data(), bv.data(), out.data(), av.rows(), av.cols(), bv.cols());
    bool rg = needs_grad(a) || needs_grad(b);
    int ai = a.id, bi = b.id;
    return push(std::move(out), rg, [ai, bi](Tape& t, const Tensor& g) {
        const Tensor& A = t.nodes_[ai].value;
        const Tensor& B = t.nodes_[bi].value;
        if (t.nodes_[ai].requires_grad) {
            kern::matmul_nt(g.data(), B.data(), t.grad_buf(ai).data(), A.rows(), B.cols(),
                            A.cols(), true);
        }
        if (t.nodes_[bi].requires_grad) {
            kern::matmul_tn(A.data(), g.data(), t.grad_buf(bi).data(), A.cols(), A.rows(),
                            B.cols(), true);
        }
    });
}

Value Tape::matmul_nt(Value a, Value b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    if (av.cols() != bv.cols()) {
        throw ShapeError("matmul_nt: inner dimensions disagree, " + av.shape_str() + " * " +
                         bv.shape_str() + "^T");
    }
    Tensor out(av.rows(), bv.rows());
    kern::matmul_nt(av.data(), bv.data(), out.data(), av.rows(), av.cols(), bv.rows());
    bool rg = needs_grad(a) || needs_grad(b);
    int ai = a.id, bi = b.id;
    return push(std::move(out), rg, [ai, bi](Tape& t, const Tensor& g) {
        const Tensor& A = t.nodes_[ai].value;
        const Tensor& B = t.nodes_[bi].value;
        // dA += G * B ; dB += G^T * A
        if (t.nodes_[ai].requires_grad) {
            kern::matmul_nn(g.data(), B.data(), t.grad_buf(ai).data(), A.rows(), B.rows(),
                            A.cols(), true);
        }
        if (t.nodes_[bi].requires_grad) {
            kern::matmul_tn(g.data(), A.data(), t.grad_buf(bi).data(), B.rows(), A.rows(),
                            A.cols(), true);
        }
    });
}

Value Tape::add(Value a, Value b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    require_same_shape(av, bv, "add");
    Tensor out(av.rows(), av.cols());
    kern::add(av.data(), bv.data(), out.data(), out.size());
    bool rg = needs_grad(a) || needs_grad(b);
    int ai = a.id, bi = b.id;
    return push(std::move(out), rg, [ai, bi](Tape& t, const Tensor& g) {
        if (t.nodes_[ai].requires_grad) t.add_grad(ai, g);
        if (t.nodes_[bi].requires_grad) t.add_grad(bi, g);
    });
}

Value Tape::sub(Value a, Value b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    require_same_shape(av, bv, "sub");
    Tensor out(av.rows(), av.cols());
    kern::sub(av.data(), bv.data(), out.data(), out.size());
    bool rg = needs_grad(a) || needs_grad(b);
    int ai = a.id, bi = b.id;
    return push(std::move(out), rg, [ai, bi](Tape& t, const Tensor& g) {
        if (t.nodes_[ai].requires_grad) t.add_grad(ai, g);
        if (t.nodes_[bi].requires_grad) {
            Tensor& buf = t.grad_buf(bi);
            kern::acc_scaled(g.data(), -1.0, buf.data(), buf.size());
        }
    });
}

Value Tape::mul(Value a, Value b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    require_same_shape(av, bv, "mul");
    Tensor out(av.rows(), av.cols());
    kern::mul(av.data(), bv.data(), out.data(), out.size());
    bool rg = needs_grad(a) || needs_grad(b);
    int ai = a.id, bi = b.id;
    return push(std::move(out), rg, [ai, bi](Tape& t, const Tensor& g) {
        if (t.nodes_[ai].requires_grad) {
            Tensor& buf = t.grad_buf(ai);
            kern::acc_mul(g.data(), t.nodes_[bi].value.data(), buf.data(), buf.size());
        }
        if (t.nodes_[bi].requires_grad) {
            Tensor& buf = t.grad_buf(bi);
            kern::acc_mul(g.data(), t.nodes_[ai].value.data(), buf.data(), buf.size());
        }
    });
}

Value Tape::scale(Value a, double s) {
    const Tensor& av = value(a);
    Tensor out(av.rows(), av.cols());
    kern::scale(av.data(), s, out.data(), out.size());
    int ai = a.id;
    return push(std::move(out), needs_grad(a), [ai, s](Tape& t, const Tensor& g) {
        if (t.nodes_[ai].requires_grad) {
            Tensor& buf = t.grad_buf(ai);
            kern::acc_scaled(g.data(), s, buf.data(), buf.size());
        }
    });
}

Value Tape::add_row(Value a, Value bias) {
    const Tensor& av = value(a);
    const Tensor& bv = value(bias);
    if (bv.rows() != 1 || bv.cols() != av.cols()) {
        throw ShapeError("add_row: bias " + bv.shape_str() + " does not broadcast over " +
                         av.shape_str());
    }
    Tensor out(av.rows(), av.cols());
    for (int i = 0; i < av.rows(); ++i)
        for (int j = 0; j < av.cols(); ++j) out.at(i, j) = av.at(i, j) + bv.at(0, j);
    bool rg = needs_grad(a) || needs_grad(bias);
    int ai = a.id, bi = bias.id;
    return push(std::move(out), rg, [ai, bi](Tape& t, const Tensor& g) {
        if (t.nodes_[ai].requires_grad) t.add_grad(ai, g);
        if (t.nodes_[bi].requires_grad) {
            Tensor& buf = t.grad_buf(bi);
            for (int i = 0; i < g.rows(); ++i)
                for (int j = 0; j < g.cols(); ++j) buf.at(0, j) += g.at(i, j);
        }
    });
}

Value Tape::elu(Value a) {
    const Tensor& av = value(a);
    Tensor out(av.rows(), av.cols());
    kern::elu(av.data(), out.data(), out.size());
    int ai = a.id;
    return push(std::move(out), needs_grad(a), [ai](Tape& t, const Tensor& g) {
        if (!t.nodes_[ai].requires_grad) return;
        Tensor& buf = t.grad_buf(ai);
        kern::elu_backward(t.nodes_[ai].value.data(), g.data(), buf.data(), buf.size());
    });
}

Value Tape::softmax_rows(Value a) {
    const Tensor& av = value(a);
    if (av.cols() < 1) throw ShapeError("softmax_rows: empty rows");
    int m = av.rows(), n = av.cols();
    Tensor out(m, n);
    kern::softmax_rows(av.data(), out.data(), m, n);
    auto y = std::make_shared<Tensor>(out);
    int ai = a.id;
    return push(std::move(out), needs_grad(a), [ai, y, m, n](Tape& t, const Tensor& g) {
        if (!t.nodes_[ai].requires_grad) return;
        Tensor& buf = t.grad_buf(ai);
        kern::softmax_rows_backward(y->data(), g.data(), buf.data(), m, n);
    });
}

Value Tape::layer_norm(Value x, Value gain, Value bias, double eps) {
    const Tensor& xv = value(x);
    const Tensor& gv = value(gain);
    const Tensor& bv = value(bias);
    if (gv.rows() != 1 || gv.cols() != xv.cols() || bv.rows() != 1 || bv.cols() != xv.cols()) {
        throw ShapeError("layer_norm: gain/bias must be 1x" + std::to_string(xv.cols()));
    }
    int m = xv.rows(), n = xv.cols();
    Tensor out(m, n);
    auto xhat = std::make_shared<Tensor>(m, n);
    auto inv_sd = std::make_shared<std::vector<double>>(m);
    kern::layer_norm_rows(xv.data(), gv.data(), bv.data(), out.data(), xhat->data(),
                          inv_sd->data(), m, n, eps);
    bool rg = needs_grad(x) || needs_grad(gain) || needs_grad(bias);
    int xi = x.id, gi = gain.id, bi = bias.id;
    return push(std::move(out), rg, [xi, gi, bi, xhat, inv_sd, m, n](Tape& t, const Tensor& g) {
        if (t.nodes_[bi].requires_grad) {
            Tensor& db = t.grad_buf(bi);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) db.at(0, j) += g.at(i, j);
        }
        if (t.nodes_[gi].requires_grad) {
            Tensor& dg = t.grad_buf(gi);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) dg.at(0, j) += g.at(i, j) * xhat->at(i, j);
        }
        if (t.nodes_[xi].requires_grad) {
            Tensor& dx = t.grad_buf(xi);
            kern::layer_norm_rows_backward_x(xhat->data(), inv_sd->data(),
                                             t.nodes_[gi].value.data(), g.data(), dx.data(), m,
                                             n);
        }
    });
}

Value Tape::dropout(Value a, double p, uint64_t rng_seed, bool training) {
    if (p < 0.0 || p >= 1.0) {
        throw ParamError("dropout: probability must be in [0, 1), got " + std::to_string(p));
    }
    if (!training || p == 0.0) return a;  // exact identity
    const Tensor& av = value(a);
    auto mask = std::make_shared<std::vector<double>>(av.size());
    SplitMix64 rng(rng_seed);
    double keep_scale = 1.0 / (1.0 - p);
    for (size_t i = 0; i < av.size(); ++i) {
        (*mask)[i] = rng.uniform() < p ? 0.0 : keep_scale;
    }
    Tensor out(av.rows(), av.cols());
    kern::mul(av.data(), mask->data(), out.data(), out.size());
    int ai = a.id;
    return push(std::move(out), needs_grad(a), [ai, mask](Tape& t, const Tensor& g) {
        if (!t.nodes_[ai].requires_grad) return;
        Tensor& buf = t.grad_buf(ai);
        kern::acc_mul(g.data(), mask->data(), buf.data(), buf.size());
    });
}

Value Tape::mse(Value a, Value b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    require_same_shape(av, bv, "mse");
    double acc = 0.0;
    for (size_t i = 0; i < av.size(); ++i) {
        double d = av[i] - bv[i];
        acc += d * d;
    }
    double inv_n = 1.0 / static_cast<double>(av.size());
    Tensor out = Tensor::scalar(acc * inv_n);
    bool rg = needs_grad(a) || needs_grad(b);
    int ai = a.id, bi = b.id;
    return push(std::move(out), rg, [ai, bi, inv_n](Tape& t, const Tensor& g) {
        const Tensor& A = t.nodes_[ai].value;
        const Tensor& B = t.nodes_[bi].value;
        double c = 2.0 * inv_n * g[0];
        if (t.nodes_[ai].requires_grad) {
            Tensor& da = t.grad_buf(ai);
            for (size_t i = 0; i < A.size(); ++i) da[i] += c * (A[i] - B[i]);
        }
        if (t.nodes_[bi].requires_grad) {
            Tensor& db = t.grad_buf(bi);
            for (size_t i = 0; i < A.size(); ++i) db[i] -= c * (A[i] - B[i]);
        }
    });
}

Value Tape::sum(Value a) {
    const Tensor& av = value(a);
    double acc = 0.0;
    for (size_t i = 0; i < av.size(); ++i) acc += av[i];
    int ai = a.id;
    return push(Tensor::scalar(acc), needs_grad(a), [ai](Tape& t, const Tensor& g) {
        if (!t.nodes_[ai].requires_grad) return;
        Tensor& buf = t.grad_buf(ai);
        double gv = g[0];
        for (size_t i = 0; i < buf.size(); ++i) buf[i] += gv;
    });
}

Value Tape::row_sums(Value a) {
    const Tensor& av = value(a);
    Tensor out(av.rows(), 1);
    for (int i = 0; i < av.rows(); ++i) {
        double s = 0.0;
        for (int j = 0; j < av.cols(); ++j) s += av.at(i, j);
        out.at(i, 0) = s;
    }
    int ai = a.id;
    return push(std::move(out), needs_grad(a), [ai](Tape& t, const Tensor& g) {
        if (!t.nodes_[ai].requires_grad) return;
        Tensor& buf = t.grad_buf(ai);
        for (int i = 0; i < buf.rows(); ++i)
            for (int j = 0; j < buf.cols(); ++j) buf.at(i, j) += g.at(i, 0);
    });
}

Value Tape::logsumexp_rows(Value a) {
    const Tensor& av = value(a);
    int m = av.rows(), n = av.cols();
    Tensor out(m, 1);
    kern::logsumexp_rows(av.data(), out.data(), m, n);
    auto lse = std::make_shared<std::vector<double>>(out.data(), out.data() + m);
    int ai = a.id;
    return push(std::move(out), needs_grad(a), [ai, lse, m, n](Tape& t, const Tensor& g) {
        if (!t.nodes_[ai].requires_grad) return;
        Tensor& buf = t.grad_buf(ai);
        kern::logsumexp_rows_backward(t.nodes_[ai].value.data(), lse->data(), g.data(),
                                      buf.data(), m, n);
    });
}

Value Tape::l2_normalize_rows(Value a) {
    const Tensor& av = value(a);
    int m = av.rows(), n = av.cols();
    Tensor out(m, n);
    auto norms = std::make_shared<std::vector<double>>(m);
    kern::l2_normalize_rows(av.data(), out.data(), norms->data(), m, n);
    auto y = std::make_shared<Tensor>(out);
    int ai = a.id;
    return push(std::move(out), needs_grad(a), [ai, norms, y, m, n](Tape& t, const Tensor& g) {
        if (!t.nodes_[ai].requires_grad) return;
        Tensor& buf = t.grad_buf(ai);
        kern::l2_normalize_rows_backward(y->data(), norms->data(), g.data(), buf.data(), m, n);
    });
}

Value Tape::gather_rows(Value a, std::vector<int> idx) {
    const Tensor& av = value(a);
    for (int r : idx) {
        if (r < 0 || r >= av.rows()) {
            throw BoundsError("gather_rows: index " + std::to_string(r) + " out of range [0, " +
                              std::to_string(av.rows()) + ")");
        }
    }
    Tensor out(static_cast<int>(idx.size()), av.cols());
    for (size_t r = 0; r < idx.size(); ++r)
        for (int j = 0; j < av.cols(); ++j) out.at(static_cast<int>(r), j) = av.at(idx[r], j);
    auto ix = std::make_shared<std::vector<int>>(std::move(idx));
    int ai = a.id;
    return push(std::move(out), needs_grad(a), [ai, ix](Tape& t, const Tensor& g) {
        if (!t.nodes_[ai].requires_grad) return;
        Tensor& buf = t.grad_buf(ai);
        for (size_t r = 0; r < ix->size(); ++r)
            for (int j = 0; j < g.cols(); ++j)
                buf.at((*ix)[r], j) += g.at(static_cast<int>(r), j);
    });
}

Value Tape::concat_rows(const std::vector<Value>& parts) {
    if (parts.empty()) throw ParamError("concat_rows: no parts");
    int cols = value(parts[0]).cols();
    int rows = 0;
    bool rg = false;
    for (Value p : parts) {
        const Tensor& pv = value(p);
        if (pv.cols() != cols) {
            throw ShapeError("concat_rows: column mismatch " + pv.shape_str());
        }
        rows += pv.rows();
        rg = rg || needs_grad(p);
    }
    Tensor out(rows, cols);
    auto ids = std::make_shared<std::vector<int>>();
    ids->reserve(parts.size());
    int r0 = 0;
    for (Value p : parts) {
        const Tensor& pv = value(p);
        for (int i = 0; i < pv.rows(); ++i)
            for (int j = 0; j < cols; ++j) out.at(r0 + i, j) = pv.at(i, j);
        r0 += pv.rows();
        ids->push_back(p.id);
    }
    return push(std::move(out), rg, [ids](Tape& t, const Tensor& g) {
        int r0 = 0;
        for (int pid : *ids) {
            const Tensor& pv = t.nodes_[pid].value;
            if (t.nodes_[pid].requires_grad) {
                Tensor& buf = t.grad_buf(pid);
                for (int i = 0; i < pv.rows(); ++i)
                    for (int j = 0; j < pv.cols(); ++j) buf.at(i, j) += g.at(r0 + i, j);
            }
            r0 += pv.rows();
        }
    });
}

Value Tape::concat_cols(Value a, Value b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    if (av.rows() != bv.rows()) {
        throw ShapeError("concat_cols: row mismatch " + av.shape_str() + " vs " +
                         bv.shape_str());
    }
    Tensor out(av.rows(), av.cols() + bv.cols());
    for (int i = 0; i < av.rows(); ++i) {
        for (int j = 0; j < av.cols(); ++j) out.at(i, j) = av.at(i, j);
        for (int j = 0; j < bv.cols(); ++j) out.at(i, av.cols() + j) = bv.at(i, j);
    }
    bool rg = needs_grad(a) || needs_grad(b);
    int ai = a.id, bi = b.id;
    int ac = av.cols();
    return push(std::move(out), rg, [ai, bi, ac](Tape& t, const Tensor& g) {
        if (t.nodes_[ai].requires_grad) {
            Tensor& da = t.grad_buf(ai);
            for (int i = 0; i < da.rows(); ++i)
                for (int j = 0; j < ac; ++j) da.at(i, j) += g.at(i, j);
        }
        if (t.nodes_[bi].requires_grad) {
            Tensor& db = t.grad_buf(bi);
            for (int i = 0; i < db.rows(); ++i)
                for (int j = 0; j < db.cols(); ++j) db.at(i, j) += g.at(i, ac + j);
        }
    });
}

Value Tape::mean_rows_by_group(Value a, std::vector<std::vector<int>> groups) {
    const Tensor& av = value(a);
    if (groups.empty()) throw ParamError("mean_rows_by_group: no groups");
    for (const auto& grp : groups) {
        if (grp.empty()) throw ParamError("mean_rows_by_group: empty group");
        for (int r : grp) {
            if (r < 0 || r >= av.rows()) {
                throw BoundsError("mean_rows_by_group: row " + std::to_string(r) +
                                  " out of range");
            }
        }
    }
    Tensor out(static_cast<int>(groups.size()), av.cols());
    for (size_t gi = 0; gi < groups.size(); ++gi) {
        double inv = 1.0 / static_cast<double>(groups[gi].size());
        for (int r : groups[gi])
            for (int j = 0; j < av.cols(); ++j) out.at(static_cast<int>(gi), j) += av.at(r, j);
        for (int j = 0; j < av.cols(); ++j) out.at(static_cast<int>(gi), j) *= inv;
    }
    auto grp = std::make_shared<std::vector<std::vector<int>>>(std::move(groups));
    int ai = a.id;
    return push(std::move(out), needs_grad(a), [ai, grp](Tape& t, const Tensor& g) {
        if (!t.nodes_[ai].requires_grad) return;
        Tensor& buf = t.grad_buf(ai);
        for (size_t gi = 0; gi < grp->size(); ++gi) {
            double inv = 1.0 / static_cast<double>((*grp)[gi].size());
            for (int r : (*grp)[gi])
                for (int j = 0; j < g.cols(); ++j)
                    buf.at(r, j) += g.at(static_cast<int>(gi), j) * inv;
        }
    });
}

Value Tape::row_mix(Value a, RowMix mix) {
    const Tensor& av = value(a);
    int m = static_cast<int>(mix.entries.size());
    Tensor out(m, av.cols());
    for (int i = 0; i < m; ++i) {
        for (const auto& [src, w] : mix.entries[i]) {
            if (src < 0 || src >= av.rows()) throw BoundsError("row_mix: source out of range");
            for (int j = 0; j < av.cols(); ++j) out.at(i, j) += w * av.at(src, j);
        }
    }
    auto mx = std::make_shared<RowMix>(std::move(mix));
    int ai = a.id;
    return push(std::move(out), needs_grad(a), [ai, mx](Tape& t, const Tensor& g) {
        if (!t.nodes_[ai].requires_grad) return;
        Tensor& buf = t.grad_buf(ai);
        for (size_t i = 0; i < mx->entries.size(); ++i) {
            for (const auto& [src, w] : mx->entries[i]) {
                for (int j = 0; j < g.cols(); ++j)
                    buf.at(src, j) += w * g.at(static_cast<int>(i), j);
            }
        }
    });
}

}  // namespace senca
