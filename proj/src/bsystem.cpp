#include "critheat/bsystem.hpp"

#include <cmath>

#include "critheat/errors.hpp"

namespace critheat {

namespace {

double exponent_q(int n) { return 4.0 / (n - 2.0); }

Eigen::VectorXd decoupled_guess(const GreenMatrix& gm) {
    // k = 1 stationary point per diagonal entry: Λ = (q/(2H))^{1/(2-q)}.
    const double q = exponent_q(gm.n);
    Eigen::VectorXd L(gm.k());
    for (std::size_t j = 0; j < gm.k(); ++j) L(j) = std::pow(q / (2.0 * gm.H(j)), 1.0 / (2.0 - q));
    return L;
}

struct LogStep {
    double value;
    Eigen::VectorXd grad;  // in ℓ = log Λ
    Eigen::MatrixXd hess;
};

LogStep log_eval(const GreenMatrix& gm, const Eigen::VectorXd& ell) {
    const Eigen::VectorXd L = ell.array().exp();
    const ITildeEval e = functional_I_tilde(gm, L);
    LogStep s;
    s.value = e.value;
    s.grad = L.cwiseProduct(e.grad);
    s.hess = L.asDiagonal() * e.hess * L.asDiagonal();
    s.hess.diagonal() += s.grad;
    return s;
}

// Newton direction, falling back to a shifted system when the log-variable
// Hessian is not positive definite away from the minimiser.
Eigen::VectorXd descent_direction(const LogStep& s) {
    Eigen::MatrixXd H = s.hess;
    double shift = 0.0;
    for (int attempt = 0; attempt < 60; ++attempt) {
        Eigen::LLT<Eigen::MatrixXd> llt(H);
        if (llt.info() == Eigen::Success) {
            Eigen::VectorXd d = -llt.solve(s.grad);
            if (d.dot(s.grad) < 0) return d;
        }
        shift = shift == 0.0 ? 1e-8 * (1.0 + s.hess.norm()) : shift * 10.0;
        H = s.hess;
        H.diagonal().array() += shift;
    }
    return -s.grad;
}

}  // namespace

ITildeEval functional_I_tilde(const GreenMatrix& gm, const Eigen::VectorXd& Lambda) {
    if (static_cast<std::size_t>(Lambda.size()) != gm.k()) {
        throw ConfigError("dimension-mismatch", "Lambda has the wrong length");
    }
    if ((Lambda.array() <= 0.0).any()) throw ConfigError("nonpositive-lambda", "Lambda must be positive");
    const double q = exponent_q(gm.n);
    ITildeEval e;
    const Eigen::VectorXd GL = gm.matrix * Lambda;
    e.value = Lambda.dot(GL) - Lambda.array().pow(q).sum();
    e.grad = 2.0 * GL - (q * Lambda.array().pow(q - 1.0)).matrix();
    e.hess = 2.0 * gm.matrix;
    e.hess.diagonal() -= (q * (q - 1.0) * Lambda.array().pow(q - 2.0)).matrix();
    return e;
}

Eigen::VectorXd height_system_residual(const GreenMatrix& gm, const Eigen::VectorXd& b) {
    const int n = gm.n;
    const std::size_t k = gm.k();
    Eigen::VectorXd r(k);
    for (std::size_t j = 0; j < k; ++j) {
        double s = std::pow(b(j), n - 3) * gm.H(j) - 2.0 * b(j) / (n - 2.0);
        for (std::size_t i = 0; i < k; ++i) {
            if (i != j) s -= std::pow(b(i), 0.5 * (n - 2)) * std::pow(b(j), 0.5 * (n - 4)) * gm.G(i, j);
        }
        r(j) = s;
    }
    return r;
}

BSolution solve_heights(const GreenMatrix& gm, const SolveOptions& opts) {
    if (!gm.is_positive_definite) {
        throw ConfigError("not-positive-definite",
                          "interaction matrix is not positive definite; the height functional is not convex");
    }
    const int n = gm.n;
    const std::size_t k = gm.k();
    Eigen::VectorXd ell = (opts.start.size() > 0 ? opts.start : decoupled_guess(gm)).array().log();
    LogStep s = log_eval(gm, ell);
    int it = 0;
    auto lambda_grad_norm = [&](const Eigen::VectorXd& l) {
        return functional_I_tilde(gm, l.array().exp().matrix()).grad.lpNorm<Eigen::Infinity>();
    };
    while (lambda_grad_norm(ell) >= opts.grad_tol) {
        if (++it > opts.max_iterations) throw NumericalError("convergence", "Newton iteration did not converge");
        const Eigen::VectorXd d = descent_direction(s);
        const double slope = d.dot(s.grad);
        double step = 1.0;
        LogStep trial;
        Eigen::VectorXd cand;
        // Near the minimiser the predicted decrease drops below the rounding
        // level of Ĩ and the Armijo test becomes meaningless; take the full
        // Newton step there.
        const bool in_rounding = std::abs(slope) < 1e-12 * (std::abs(s.value) + 1e-300);
        bool accepted = in_rounding;
        if (!in_rounding) {
            for (int bt = 0; bt < 60 && !accepted; ++bt) {
                cand = ell + step * d;
                trial = log_eval(gm, cand);
                accepted = trial.value <= s.value + 1e-4 * step * slope;
                if (!accepted) step *= 0.5;
            }
        }
        if (!accepted || in_rounding) {
            cand = ell + d;
            trial = log_eval(gm, cand);
        }
        ell = cand;
        s = trial;
    }

    BSolution bs;
    bs.n = n;
    bs.iterations = it;
    bs.Lambda = ell.array().exp();
    bs.grad_norm = lambda_grad_norm(ell);
    bs.b = bs.Lambda.array().pow(2.0 / (n - 2.0));
    bs.residual = height_system_residual(gm, bs.b).lpNorm<Eigen::Infinity>();

    const Eigen::VectorXd& b = bs.b;
    bs.M.resize(k, k);
    for (std::size_t j = 0; j < k; ++j) {
        double mjj = (n - 3.0) * std::pow(b(j), n - 4) * gm.H(j);
        for (std::size_t i = 0; i < k; ++i) {
            if (i == j) continue;
            mjj -= 0.5 * (n - 4) * std::pow(b(j), 0.5 * (n - 6)) * std::pow(b(i), 0.5 * (n - 2)) * gm.G(i, j);
            bs.M(i, j) = -0.5 * (n - 2) * std::pow(b(j) * b(i), 0.5 * (n - 4)) * gm.G(i, j);
        }
        bs.M(j, j) = mjj;
    }
    bs.hessI = bs.M;
    bs.hessI.diagonal().array() -= 2.0 / (n - 2.0);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (bs.hessI + bs.hessI.transpose()));
    bs.sigma_bar = 0.5 * (n - 2) * es.eigenvalues();
    bs.P = es.eigenvectors().transpose();
    return bs;
}

ReciprocalCheck positivity_reciprocal_check(const GreenMatrix& gm) {
    ReciprocalCheck rc;
    if (gm.is_positive_definite) {
        try {
            const BSolution bs = solve_heights(gm);
            rc.solvable = bs.residual < 1e-8 && (bs.b.array() > 0).all();
            rc.iterations = bs.iterations;
        } catch (const Error&) {
            rc.solvable = false;
        }
        return rc;
    }
    // Damped descent in log variables; without convexity Ĩ is unbounded
    // below along the nonnegative least eigenvector, so Λ runs off.
    Eigen::VectorXd ell = decoupled_guess(gm).array().log();
    const double big = std::log(1e8), small = std::log(1e-8);
    for (int it = 0; it < 2000; ++it) {
        rc.iterations = it + 1;
        const LogStep s = log_eval(gm, ell);
        if (!std::isfinite(s.value)) {
            rc.escaped_to_boundary = true;
            break;
        }
        const Eigen::VectorXd d = descent_direction(s);
        double step = 1.0;
        Eigen::VectorXd cand = ell;
        bool moved = false;
        for (int bt = 0; bt < 60; ++bt) {
            cand = ell + step * d;
            if (log_eval(gm, cand).value <= s.value + 1e-4 * step * d.dot(s.grad)) {
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved) break;  // stalled at a finite point
        ell = cand;
        if (ell.maxCoeff() > big || ell.minCoeff() < small) {
            rc.escaped_to_boundary = true;
            break;
        }
    }
    rc.solvable = false;
    return rc;
}

}  // namespace critheat
