#include "cmc/smo.hpp"

#include "cmc/errors.hpp"
#include "serial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace cmc {

double PolynomialKernel::operator()(const RowView& a, const RowView& b) const {
    const double base = a.dot(b) + 1.0;
    double r = 1.0;
    for (int i = 0; i < degree; ++i) {
        r *= base;
    }
    return r;
}

KernelMatrix::KernelMatrix(const FeatureMatrix& x, PolynomialKernel kernel, std::size_t cache_mb)
    : x_(x), kernel_(kernel), n_(x.rows()), diag_(n_) {
    for (std::size_t i = 0; i < n_; ++i) {
        diag_[i] = kernel_(x_.row(i), x_.row(i));
    }
    const std::size_t budget = cache_mb * 1024 * 1024 / sizeof(double);
    if (n_ * n_ <= budget) {
        full_.resize(n_ * n_);
        for (std::size_t i = 0; i < n_; ++i) {
            const auto xi = x_.row(i);
            full_[i * n_ + i] = diag_[i];
            for (std::size_t j = i + 1; j < n_; ++j) {
                const double k = kernel_(xi, x_.row(j));
                full_[i * n_ + j] = k;
                full_[j * n_ + i] = k;
            }
        }
    } else {
        capacity_ = std::max<std::size_t>(2, n_ == 0 ? 2 : budget / n_);
    }
}

std::span<const double> KernelMatrix::row(std::size_t i) {
    if (!full_.empty()) {
        return {full_.data() + i * n_, n_};
    }
    if (const auto it = cache_.find(i); it != cache_.end()) {
        lru_.splice(lru_.begin(), lru_, it->second.second);
        return it->second.first;
    }
    if (cache_.size() >= capacity_) {
        cache_.erase(lru_.back());
        lru_.pop_back();
    }
    std::vector<double> r(n_);
    const auto xi = x_.row(i);
    for (std::size_t j = 0; j < n_; ++j) {
        r[j] = kernel_(xi, x_.row(j));
    }
    lru_.push_front(i);
    auto& slot = cache_[i];
    slot = {std::move(r), lru_.begin()};
    return slot.first;
}

namespace {

constexpr double tau = 1e-12;

bool in_up(int y, double a, double c) {
    return (y > 0 && a < c) || (y < 0 && a > 0.0);
}

bool in_low(int y, double a, double c) {
    return (y > 0 && a > 0.0) || (y < 0 && a < c);
}

// m(alpha) - M(alpha) for a given gradient.
double violation(std::span<const int> y, std::span<const double> alpha, std::span<const double> g, double c) {
    double up = -std::numeric_limits<double>::infinity();
    double low = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < y.size(); ++t) {
        const double v = -y[t] * g[t];
        if (in_up(y[t], alpha[t], c)) {
            up = std::max(up, v);
        }
        if (in_low(y[t], alpha[t], c)) {
            low = std::min(low, v);
        }
    }
    if (!std::isfinite(up) || !std::isfinite(low)) {
        return 0.0;
    }
    return up - low;
}

double compute_rho(std::span<const int> y, std::span<const double> alpha, std::span<const double> g, double c) {
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    std::size_t n_free = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double yg = y[i] * g[i];
        if (alpha[i] >= c) {
            if (y[i] < 0) {
                ub = std::min(ub, yg);
            } else {
                lb = std::max(lb, yg);
            }
        } else if (alpha[i] <= 0.0) {
            if (y[i] > 0) {
                ub = std::min(ub, yg);
            } else {
                lb = std::max(lb, yg);
            }
        } else {
            ++n_free;
            sum_free += yg;
        }
    }
    if (n_free > 0) {
        return sum_free / static_cast<double>(n_free);
    }
    if (!std::isfinite(ub)) {
        return lb;
    }
    if (!std::isfinite(lb)) {
        return ub;
    }
    return (ub + lb) / 2.0;
}

}  // namespace

SmoSolution solve_smo(KernelMatrix& kernel, std::span<const int> y, double c, double tolerance,
                      std::size_t max_iterations) {
    const std::size_t n = kernel.size();
    if (y.size() != n) {
        throw training_error("SMO: label count does not match the kernel matrix");
    }
    SmoSolution sol;
    sol.alpha.assign(n, 0.0);
    sol.gradient.assign(n, -1.0);
    auto& alpha = sol.alpha;
    auto& g = sol.gradient;

    while (sol.iterations < max_iterations) {
        double gmax = -std::numeric_limits<double>::infinity();
        std::size_t i = n;
        for (std::size_t t = 0; t < n; ++t) {
            if (in_up(y[t], alpha[t], c) && -y[t] * g[t] >= gmax) {
                gmax = -y[t] * g[t];
                i = t;
            }
        }
        if (i == n) {
            break;
        }
        const auto ki = kernel.row(i);
        double gmax2 = -std::numeric_limits<double>::infinity();
        double obj_min = std::numeric_limits<double>::infinity();
        std::size_t j = n;
        for (std::size_t t = 0; t < n; ++t) {
            if (!in_low(y[t], alpha[t], c)) {
                continue;
            }
            gmax2 = std::max(gmax2, y[t] * g[t]);
            const double diff = gmax + y[t] * g[t];
            if (diff > 0.0) {
                double quad = kernel.diag(i) + kernel.diag(t) - 2.0 * ki[t];
                if (quad <= 0.0) {
                    quad = tau;
                }
                const double obj = -(diff * diff) / quad;
                if (obj <= obj_min) {
                    obj_min = obj;
                    j = t;
                }
            }
        }
        sol.gap = gmax + gmax2;
        if (sol.gap < tolerance || j == n) {
            sol.converged = true;
            break;
        }
        ++sol.iterations;

        const auto kj = kernel.row(j);
        const auto ki_again = kernel.row(i);
        const double kij = ki_again[j];
        const double old_i = alpha[i];
        const double old_j = alpha[j];
        if (y[i] != y[j]) {
            double quad = kernel.diag(i) + kernel.diag(j) - 2.0 * kij;
            if (quad <= 0.0) {
                quad = tau;
            }
            const double delta = (-g[i] - g[j]) / quad;
            const double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0.0) {
                if (alpha[j] < 0.0) {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if (alpha[i] < 0.0) {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if (diff > 0.0) {
                if (alpha[i] > c) {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if (alpha[j] > c) {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            double quad = kernel.diag(i) + kernel.diag(j) - 2.0 * kij;
            if (quad <= 0.0) {
                quad = tau;
            }
            const double delta = (g[i] - g[j]) / quad;
            const double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (sum > c) {
                if (alpha[i] > c) {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if (alpha[j] < 0.0) {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if (sum > c) {
                if (alpha[j] > c) {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if (alpha[i] < 0.0) {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        const double di = (alpha[i] - old_i) * y[i];
        const double dj = (alpha[j] - old_j) * y[j];
        for (std::size_t t = 0; t < n; ++t) {
            g[t] += y[t] * (ki_again[t] * di + kj[t] * dj);
        }
    }
    if (!sol.converged) {
        sol.gap = violation(y, alpha, g, c);
        sol.converged = sol.gap < tolerance;
    }
    sol.rho = compute_rho(y, alpha, g, c);
    return sol;
}

double kkt_gap(KernelMatrix& kernel, std::span<const int> y, std::span<const double> alpha, double c) {
    const std::size_t n = kernel.size();
    std::vector<double> g(n, -1.0);
    for (std::size_t j = 0; j < n; ++j) {
        if (alpha[j] == 0.0) {
            continue;
        }
        const auto kj = kernel.row(j);
        for (std::size_t t = 0; t < n; ++t) {
            g[t] += y[t] * y[j] * alpha[j] * kj[t];
        }
    }
    return violation(y, alpha, g, c);
}

double PlattScaling::operator()(double decision) const {
    const double f = a * decision + b;
    return f >= 0.0 ? std::exp(-f) / (1.0 + std::exp(-f)) : 1.0 / (1.0 + std::exp(f));
}

PlattScaling PlattScaling::fit(std::span<const double> decision, std::span<const int> y) {
    const std::size_t n = decision.size();
    double prior1 = 0.0;
    double prior0 = 0.0;
    for (const int v : y) {
        (v > 0 ? prior1 : prior0) += 1.0;
    }
    constexpr int max_iter = 100;
    constexpr double min_step = 1e-10;
    constexpr double sigma = 1e-12;
    constexpr double eps = 1e-5;
    const double hi = (prior1 + 1.0) / (prior1 + 2.0);
    const double lo = 1.0 / (prior0 + 2.0);
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) {
        t[i] = y[i] > 0 ? hi : lo;
    }
    const auto objective = [&](double a, double b) {
        double f = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double z = decision[i] * a + b;
            f += z >= 0.0 ? t[i] * z + std::log1p(std::exp(-z)) : (t[i] - 1.0) * z + std::log1p(std::exp(z));
        }
        return f;
    };
    double a = 0.0;
    double b = std::log((prior0 + 1.0) / (prior1 + 1.0));
    double fval = objective(a, b);
    for (int iter = 0; iter < max_iter; ++iter) {
        double h11 = sigma;
        double h22 = sigma;
        double h21 = 0.0;
        double g1 = 0.0;
        double g2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double z = decision[i] * a + b;
            double p;
            double q;
            if (z >= 0.0) {
                p = std::exp(-z) / (1.0 + std::exp(-z));
                q = 1.0 / (1.0 + std::exp(-z));
            } else {
                p = 1.0 / (1.0 + std::exp(z));
                q = std::exp(z) / (1.0 + std::exp(z));
            }
            const double d2 = p * q;
            h11 += decision[i] * decision[i] * d2;
            h22 += d2;
            h21 += decision[i] * d2;
            const double d1 = t[i] - p;
            g1 += decision[i] * d1;
            g2 += d1;
        }
        if (std::abs(g1) < eps && std::abs(g2) < eps) {
            break;
        }
        const double det = h11 * h22 - h21 * h21;
        const double da = -(h22 * g1 - h21 * g2) / det;
        const double db = -(-h21 * g1 + h11 * g2) / det;
        const double gd = g1 * da + g2 * db;
        double step = 1.0;
        while (step >= min_step) {
            const double na = a + step * da;
            const double nb = b + step * db;
            const double nf = objective(na, nb);
            if (nf < fval + 0.0001 * step * gd) {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step /= 2.0;
        }
        if (step < min_step) {
            break;
        }
    }
    return {a, b};
}

std::shared_ptr<const SmoClassifier> SmoClassifier::train(const SmoParams& params, const Dataset& ds) {
    detail::check_trainable(ds);
    const std::size_t n = ds.size();
    const std::size_t nf = ds.n_features();

    std::shared_ptr<SmoClassifier> m(new SmoClassifier());
    m->n_labels_ = ds.n_labels();
    m->n_features_ = nf;
    m->space_ = label_space_id(ds.labels);
    m->sparse_ = ds.x.is_sparse();
    m->kernel_ = PolynomialKernel{params.degree};
    m->offset_.assign(nf, 0.0);
    m->inv_scale_.assign(nf, 1.0);

    if (params.normalize) {
        if (ds.x.is_sparse()) {
            std::vector<double> top(nf, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                ds.row(i).for_each([&](std::size_t c, double v) { top[c] = std::max(top[c], std::abs(v)); });
            }
            for (std::size_t c = 0; c < nf; ++c) {
                m->inv_scale_[c] = top[c] > 0.0 ? 1.0 / top[c] : 0.0;
            }
        } else {
            std::vector<double> lo(nf, std::numeric_limits<double>::infinity());
            std::vector<double> hi(nf, -std::numeric_limits<double>::infinity());
            for (std::size_t i = 0; i < n; ++i) {
                ds.row(i).for_each([&](std::size_t c, double v) {
                    lo[c] = std::min(lo[c], v);
                    hi[c] = std::max(hi[c], v);
                });
            }
            for (std::size_t c = 0; c < nf; ++c) {
                m->offset_[c] = lo[c];
                m->inv_scale_[c] = hi[c] > lo[c] ? 1.0 / (hi[c] - lo[c]) : 0.0;
            }
        }
    }

    FeatureMatrix xn = FeatureMatrix::empty_like(ds.x);
    {
        std::vector<std::uint32_t> cols;
        std::vector<double> vals;
        for (std::size_t i = 0; i < n; ++i) {
            m->transform(ds.row(i), cols, vals);
            if (xn.is_sparse()) {
                xn.push_sparse(cols, vals);
            } else {
                xn.push_dense(vals);
            }
        }
    }

    KernelMatrix kernel(xn, m->kernel_, params.cache_mb);
    const std::size_t n_machines = m->n_labels_ == 2 ? 1 : m->n_labels_;
    std::vector<SmoSolution> solutions;
    std::vector<int> y(n);
    std::vector<double> decision(n);
    for (std::size_t c = 0; c < n_machines; ++c) {
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = ds.y[i] == c ? 1 : -1;
        }
        auto sol = solve_smo(kernel, y, params.c, params.tolerance, params.max_iterations);
        for (std::size_t i = 0; i < n; ++i) {
            decision[i] = y[i] * (sol.gradient[i] + 1.0) - sol.rho;
        }
        Machine mach;
        mach.rho = sol.rho;
        mach.platt = PlattScaling::fit(decision, y);
        mach.iterations = sol.iterations;
        mach.converged = sol.converged;
        for (std::size_t i = 0; i < n; ++i) {
            if (sol.alpha[i] > 0.0) {
                mach.sv.push_back(static_cast<std::uint32_t>(i));
                mach.coef.push_back(sol.alpha[i] * y[i]);
            }
        }
        m->machines_.push_back(std::move(mach));
    }

    // Keep only rows that are a support vector of some machine.
    std::vector<std::uint32_t> remap(n, std::numeric_limits<std::uint32_t>::max());
    std::vector<std::size_t> keep;
    for (const auto& mach : m->machines_) {
        for (const auto i : mach.sv) {
            if (remap[i] == std::numeric_limits<std::uint32_t>::max()) {
                remap[i] = 0;
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (remap[i] != std::numeric_limits<std::uint32_t>::max()) {
            remap[i] = static_cast<std::uint32_t>(keep.size());
            keep.push_back(i);
        }
    }
    for (auto& mach : m->machines_) {
        for (auto& i : mach.sv) {
            i = remap[i];
        }
    }
    m->support_vectors_ = xn.select(keep);
    return m;
}

void SmoClassifier::transform(const RowView& x, std::vector<std::uint32_t>& cols, std::vector<double>& vals) const {
    cols.clear();
    vals.clear();
    if (sparse_) {
        x.for_each([&](std::size_t c, double v) {
            const double t = v * inv_scale_[c];
            if (t != 0.0) {
                cols.push_back(static_cast<std::uint32_t>(c));
                vals.push_back(t);
            }
        });
        return;
    }
    vals.assign(n_features_, 0.0);
    for (std::size_t c = 0; c < n_features_; ++c) {
        vals[c] = (x.at(c) - offset_[c]) * inv_scale_[c];
    }
}

std::vector<double> SmoClassifier::decision_values(const RowView& x) const {
    check_dim(x);
    std::vector<std::uint32_t> cols;
    std::vector<double> vals;
    transform(x, cols, vals);
    const RowView z = sparse_ ? RowView::sparse(cols, vals, n_features_) : RowView::dense(vals);
    std::vector<double> k(support_vectors_.rows());
    for (std::size_t s = 0; s < k.size(); ++s) {
        k[s] = kernel_(support_vectors_.row(s), z);
    }
    std::vector<double> out;
    out.reserve(machines_.size());
    for (const auto& mach : machines_) {
        double f = 0.0;
        for (std::size_t s = 0; s < mach.sv.size(); ++s) {
            f += mach.coef[s] * k[mach.sv[s]];
        }
        out.push_back(f - mach.rho);
    }
    return out;
}

ProbDist SmoClassifier::predict_proba(const RowView& x) const {
    const auto f = decision_values(x);
    ProbDist d{space_, std::vector<double>(n_labels_)};
    if (machines_.size() == 1) {
        d.p[0] = machines_[0].platt(f[0]);
        d.p[1] = 1.0 - d.p[0];
        return d;
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < n_labels_; ++c) {
        d.p[c] = machines_[c].platt(f[c]);
        sum += d.p[c];
    }
    if (!(sum > 0.0)) {
        std::fill(d.p.begin(), d.p.end(), 1.0 / static_cast<double>(n_labels_));
        return d;
    }
    for (auto& v : d.p) {
        v /= sum;
    }
    return d;
}

void SmoClassifier::save(std::ostream& out) const {
    out << "smo_margin " << n_labels_ << ' ' << n_features_ << ' ' << space_ << ' ' << kernel_.degree << '\n';
    out << "scale";
    for (std::size_t c = 0; c < n_features_; ++c) {
        out << ' ';
        serial::write_double(out, offset_[c]);
        out << ' ';
        serial::write_double(out, inv_scale_[c]);
    }
    out << '\n';
    out << "support " << (sparse_ ? "sparse " : "dense ") << support_vectors_.rows() << '\n';
    for (std::size_t s = 0; s < support_vectors_.rows(); ++s) {
        const auto r = support_vectors_.row(s);
        if (r.is_sparse()) {
            out << r.columns().size();
            r.for_each([&](std::size_t c, double v) {
                out << ' ' << c << ' ';
                serial::write_double(out, v);
            });
        } else {
            for (std::size_t c = 0; c < r.dim(); ++c) {
                if (c > 0) {
                    out << ' ';
                }
                serial::write_double(out, r.values()[c]);
            }
        }
        out << '\n';
    }
    out << "machines " << machines_.size() << '\n';
    for (const auto& m : machines_) {
        serial::write_double(out, m.rho);
        out << ' ';
        serial::write_double(out, m.platt.a);
        out << ' ';
        serial::write_double(out, m.platt.b);
        out << ' ' << m.iterations << ' ' << (m.converged ? 1 : 0) << ' ' << m.sv.size();
        for (std::size_t s = 0; s < m.sv.size(); ++s) {
            out << ' ' << m.sv[s] << ' ';
            serial::write_double(out, m.coef[s]);
        }
        out << '\n';
    }
}

std::shared_ptr<const SmoClassifier> SmoClassifier::load(std::istream& in) {
    std::shared_ptr<SmoClassifier> m(new SmoClassifier());
    m->n_labels_ = serial::read_uint(in);
    m->n_features_ = serial::read_uint(in);
    m->space_ = serial::read_uint(in);
    m->kernel_.degree = static_cast<int>(serial::read_uint(in));
    if (m->n_labels_ < 2 || m->kernel_.degree < 1) {
        throw data_error("model file: corrupt SMO header");
    }
    serial::expect(in, "scale");
    m->offset_.resize(m->n_features_);
    m->inv_scale_.resize(m->n_features_);
    for (std::size_t c = 0; c < m->n_features_; ++c) {
        m->offset_[c] = serial::read_double(in);
        m->inv_scale_[c] = serial::read_double(in);
    }
    serial::expect(in, "support");
    const auto storage = serial::token(in);
    if (storage != "sparse" && storage != "dense") {
        throw data_error("model file: bad support vector storage '" + storage + "'");
    }
    const auto n_sv = serial::read_uint(in);
    m->sparse_ = storage == "sparse";
    m->support_vectors_ =
        storage == "sparse" ? FeatureMatrix::sparse(m->n_features_) : FeatureMatrix::dense(m->n_features_);
    std::vector<std::uint32_t> cols;
    std::vector<double> vals;
    for (std::uint64_t s = 0; s < n_sv; ++s) {
        cols.clear();
        vals.clear();
        if (storage == "sparse") {
            const auto nnz = serial::read_uint(in);
            for (std::uint64_t e = 0; e < nnz; ++e) {
                cols.push_back(static_cast<std::uint32_t>(serial::read_uint(in)));
                vals.push_back(serial::read_double(in));
            }
            try {
                m->support_vectors_.push_sparse(cols, vals);
            } catch (const std::exception& e) {
                throw data_error(std::string("model file: ") + e.what());
            }
        } else {
            for (std::size_t c = 0; c < m->n_features_; ++c) {
                vals.push_back(serial::read_double(in));
            }
            m->support_vectors_.push_dense(vals);
        }
    }
    serial::expect(in, "machines");
    const auto n_machines = serial::read_uint(in);
    if (n_machines != (m->n_labels_ == 2 ? 1 : m->n_labels_)) {
        throw data_error("model file: machine count does not match label count");
    }
    for (std::uint64_t k = 0; k < n_machines; ++k) {
        Machine mach;
        mach.rho = serial::read_double(in);
        mach.platt.a = serial::read_double(in);
        mach.platt.b = serial::read_double(in);
        mach.iterations = serial::read_uint(in);
        mach.converged = serial::read_uint(in) != 0;
        const auto n_coef = serial::read_uint(in);
        for (std::uint64_t s = 0; s < n_coef; ++s) {
            const auto idx = serial::read_uint(in);
            if (idx >= n_sv) {
                throw data_error("model file: support vector index out of range");
            }
            mach.sv.push_back(static_cast<std::uint32_t>(idx));
            mach.coef.push_back(serial::read_double(in));
        }
        m->machines_.push_back(std::move(mach));
    }
    return m;
}

}  // namespace cmc
