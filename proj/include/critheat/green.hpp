#pragma once

#include <Eigen/Dense>

#include <vector>

#include "critheat/bubble.hpp"

namespace critheat {

using Point = std::vector<double>;

/// Ball of radius R centred at the origin in R^n. It carries the amplitude
/// α_n of the fundamental solution Γ(z) = α_n|z|^{2-n}, which follows the
/// bubble's convention (ΔΓ = 0 away from 0, Γ = U's far-field tail).
struct BallDomain {
    BallDomain() = default;
    BallDomain(const Dim& dim, double R);
    int n = 0;
    double R = 1.0;
    double alpha_n = 0.0;

    bool contains(const Point& x) const;  // open ball
};

double fundamental_solution(const BallDomain& dom, const Point& z);

/// Dirichlet Green's function G(x,y) = Γ(x−y) − H(x,y) (method of images).
double green_ball(const BallDomain& dom, const Point& x, const Point& y);
/// Regular part H(x,y) = Γ((|y|/R)(x − R²y/|y|²)); smooth in both arguments.
double regular_part(const BallDomain& dom, const Point& x, const Point& y);
/// Robin function H(x,x) = α_n ((R² − |x|²)/R)^{2-n}.
double robin(const BallDomain& dom, const Point& x);
/// Gradients in the first argument.
Point grad_x_regular_part(const BallDomain& dom, const Point& x, const Point& y);
Point grad_x_green(const BallDomain& dom, const Point& x, const Point& y);

/// Regular part for the half-space {x_n > 0}: Γ(x − ȳ), ȳ the mirror of y.
double regular_part_half_space(const Dim& dim, const Point& x, const Point& y);

/// The k×k interaction matrix with H(q_j,q_j) on the diagonal and
/// −G(q_i,q_j) off it.
struct GreenMatrix {
    std::vector<Point> q;
    Eigen::MatrixXd matrix;
    std::vector<double> eigen;  // ascending
    bool is_positive_definite = false;
    bool cholesky_succeeds = false;
    double R = 1.0;
    int n = 0;

    std::size_t k() const noexcept { return q.size(); }
    double H(std::size_t j) const { return matrix(j, j); }
    double G(std::size_t i, std::size_t j) const { return -matrix(i, j); }
};

GreenMatrix interaction_matrix(const BallDomain& dom, const std::vector<Point>& q);
/// Rebuilds the spectral data for a matrix read back from storage.
GreenMatrix green_matrix_from(int n, double R, std::vector<Point> q, const Eigen::MatrixXd& matrix);

}  // namespace critheat
