// Prints the two halves of the main result side by side: the marginal MLE's
// mean absolute error shrinking like 1/sqrt(n), and the truncated lower bound
// on the conditional MLE's mean absolute error growing without limit.
#include <cstdio>
#include <vector>

#include "seqstop/seqstop.hpp"

int main() {
  std::printf("marginal MLE, E|estimate|\n%8s %14s\n", "n", "mae");
  for (int n : {1, 10, 100, 1000, 10000}) std::printf("%8d %14.8f\n", n, seqstop::marginal_mae(n).mae);

  const std::vector<double> levels{2, 5, 10, 50, 100, 500, 1000, 10000, 100000};
  std::printf("\nconditional MLE, n = 1: lower bound on E|estimate| truncated at N\n%10s %12s %12s\n", "N", "bound",
              "quadrature");
  for (const auto& row : seqstop::divergence_curve(1, levels)) {
    std::printf("%10.0f %12.6f %12.6f\n", row.level, row.bound, row.quadrature);
  }
  std::printf("\nslope of bound against log N: %.6f (phi(psi1(0)) = %.6f)\n",
              seqstop::fit_log_slope(seqstop::divergence_curve(1, std::vector<double>{1e3, 1e4, 1e5})),
              seqstop::bound_weight());
}
