#include "deer/envs/lqr.hpp"

#include <algorithm>
#include <stdexcept>

namespace deer::envs {

using nn::Matrix;

LqrSolution solve_lqr(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r, double tol,
                      int max_iterations) {
    const auto n = a.rows();
    if (a.cols() != n || b.rows() != n || q.rows() != n || q.cols() != n || r.rows() != b.cols() ||
        r.cols() != b.cols())
        throw nn::ShapeError("solve_lqr: inconsistent matrix shapes");

    // Structured doubling: A_k -> 0, H_k -> P (stabilizing DARE solution).
    const Matrix identity = Matrix::Identity(n, n);
    Matrix ak = a;
    Matrix gk = b * r.ldlt().solve(b.transpose());
    Matrix hk = q;

    LqrSolution sol;
    for (int it = 1; it <= max_iterations; ++it) {
        const Eigen::PartialPivLU<Matrix> w(identity + gk * hk);
        const Matrix w_inv_a = w.solve(ak);
        const Matrix w_inv_g = w.solve(gk);
        const Matrix h_next = hk + ak.transpose() * hk * w_inv_a;
        const Matrix g_next = gk + ak * w_inv_g * ak.transpose();
        const Matrix a_next = ak * w_inv_a;
        const double change = (h_next - hk).norm() / std::max(1.0, h_next.norm());
        ak = a_next;
        gk = g_next;
        hk = h_next;
        sol.iterations = it;
        if (change < tol) break;
        if (it == max_iterations) throw std::runtime_error("solve_lqr: doubling iteration did not converge");
    }
    sol.cost_to_go = 0.5 * (hk + hk.transpose());
    const Matrix btp = b.transpose() * sol.cost_to_go;
    sol.gain = (r + btp * b).ldlt().solve(btp * a);
    return sol;
}

}  // namespace deer::envs
