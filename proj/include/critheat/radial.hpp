#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace critheat {

/// Nodes on [0, r_max] tagged with a dimension, plus weights for
/// ∫₀^{r_max} f(r) r^{n-1} dr. The weights integrate the piecewise-linear
/// interpolant of f exactly, so constants (and the ball volume) come out to
/// rounding error.
class RadialGrid {
public:
    /// r_i = r_min·ρ^i up to r_max, optionally preceded by r = 0.
    static RadialGrid geometric(int n, double r_min, double r_max, std::size_t count,
                                bool with_origin = true);
    /// r(s) = A·sinh(s·asinh(r_max/A)), s uniform on [0,1]: spacing ≈ A·h near 0
    /// and geometric far out. Starts at the origin.
    static RadialGrid sinh_graded(int n, double A, double r_max, std::size_t count);
    static RadialGrid uniform(int n, double r_max, std::size_t count);
    static RadialGrid from_nodes(int n, std::vector<double> nodes);

    int dim() const noexcept { return n_; }
    std::size_t size() const noexcept { return nodes_.size(); }
    double r_max() const noexcept { return nodes_.back(); }
    const std::vector<double>& nodes() const noexcept { return nodes_; }
    const std::vector<double>& weights() const noexcept { return weights_; }
    double operator[](std::size_t i) const noexcept { return nodes_[i]; }

    /// Σ w_i f_i  ≈ ∫ f r^{n-1} dr (no sphere area factor).
    double integrate(std::span<const double> f) const;
    /// ω_n Σ w_i f_i ≈ ∫_{B_{r_max}} f dx.
    double ball_integral(std::span<const double> f) const;

    /// Index of the last node ≤ r (0 if r is below the first node).
    std::size_t locate(double r) const;

private:
    RadialGrid(int n, std::vector<double> nodes);
    int n_;
    std::vector<double> nodes_;
    std::vector<double> weights_;
};

/// Samples of a radial function on a grid.
class RadialField {
public:
    RadialField(RadialGrid grid, std::vector<double> values);
    static RadialField sample(const RadialGrid& grid, const std::function<double(double)>& f);

    const RadialGrid& grid() const noexcept { return grid_; }
    const std::vector<double>& values() const noexcept { return values_; }
    double operator[](std::size_t i) const noexcept { return values_[i]; }
    std::size_t size() const noexcept { return values_.size(); }

private:
    RadialGrid grid_;
    std::vector<double> values_;
};

/// Surface area of the unit sphere S^{n-1}.
double sphere_area(int n);

/// Fornberg finite-difference weights for the derivative of order `order`
/// at x0 from the stencil nodes x[0..m).
std::vector<double> fd_weights(double x0, std::span<const double> x, int order);

/// Values of a radial operator at the interior nodes of a grid.
/// `values[i]` belongs to node `first + i`.
struct InteriorSamples {
    std::size_t first = 0;
    std::vector<double> values;
    /// Sum of absolute values of the individual terms plus |u|/r² at each
    /// node; used to turn the residual into a relative one.
    std::vector<double> scale;
};

/// Applies u'' + (n-1)/r u' − ℓ(ℓ+n-2)/r² u + V(r) u − rhs(r) with centered
/// nonuniform stencils of `width` points (3, 5 or 7) at every node with a
/// full stencil and r > 0.
InteriorSamples apply_radial_operator(const RadialGrid& grid, std::span<const double> u,
                                      const std::function<double(double)>& potential,
                                      int ell = 0, int width = 5,
                                      const std::function<double(double)>& rhs = {});

/// Centered first derivative (3-point nonuniform), one-sided at the ends.
std::vector<double> gradient(const RadialGrid& grid, std::span<const double> u);

/// Piecewise quintic Hermite interpolant from values and first and second
/// derivatives. Beyond the last node it continues as a power law that matches
/// the value and logarithmic derivative there.
class SmoothProfile {
public:
    SmoothProfile() = default;
    SmoothProfile(std::vector<double> r, std::vector<double> f, std::vector<double> f1,
                  std::vector<double> f2);

    double value(double r) const;
    double derivative(double r) const;
    double second_derivative(double r) const;
    bool empty() const noexcept { return r_.empty(); }
    double r_max() const noexcept { return r_.back(); }
    const std::vector<double>& nodes() const noexcept { return r_; }
    const std::vector<double>& values() const noexcept { return f_; }

private:
    void eval(double r, double out[3]) const;
    std::vector<double> r_, f_, f1_, f2_;
};

/// Solves a tridiagonal system in place: sub (a, length N, a[0] unused),
/// diag (b), super (c, c[N-1] unused), rhs d → solution in d.
void solve_tridiagonal(std::span<const double> a, std::span<const double> b,
                       std::span<const double> c, std::span<double> d);

/// Symmetric tridiagonal matrix (diagonal d, off-diagonal e with e[i]
/// coupling i and i+1).
struct SymTridiag {
    std::vector<double> d, e;

    /// Number of eigenvalues strictly below x (Sturm sequence count).
    std::size_t count_below(double x) const;
    /// k-th smallest eigenvalue (k from 0) by bisection.
    double eigenvalue(std::size_t k) const;
    /// Eigenvector for a computed eigenvalue by inverse iteration.
    std::vector<double> eigenvector(double lambda) const;
    double gershgorin_low() const;
    double gershgorin_high() const;
};

/// Conservative finite-volume discretisation of the radial Laplacian on a
/// grid starting at r = 0: zero flux at the origin, Dirichlet at the last
/// node. Face conductances c_i = r_{i+1/2}^{n-1}/(r_{i+1}-r_i), cell volumes
/// V_i = (r_{i+1/2}^n − r_{i-1/2}^n)/n, and Δ_h u = (K u)/V.
struct FluxLaplacian {
    explicit FluxLaplacian(const RadialGrid& grid);

    std::size_t unknowns() const noexcept { return volume.size(); }  // all nodes but the last
    std::vector<double> conductance;  // faces i+1/2, i = 0..N-2
    std::vector<double> volume;       // cells 0..N-2

    /// Symmetric form V^{-1/2}(−K)V^{-1/2} − diag(potential) of −(Δ_h + V).
    SymTridiag symmetric_operator(std::span<const double> potential) const;
};

}  // namespace critheat
