// Sketches the later frames of a self-similar matrix sequence with Frequent
// Directions, using the first frame's top directions as the prediction for
// the learned variant.

#include <cstdio>

#include "learnsketch/learnsketch.hpp"

int main() {
  namespace ls = learnsketch;
  const std::size_t rank = 20;
  const auto seq = ls::matrix_sequence(5, 64, 256, 8, 0.5, 7);
  const auto oracle = ls::first_instance_oracle(seq.front().a, rank / 2);

  for (std::size_t i = 1; i < seq.size(); ++i) {
    const auto& a = seq[i].a;
    ls::FrequentDirections fd(2 * rank, rank, a.cols());
    fd.update_rows(a);
    ls::LearnedFrequentDirections lfd(2 * rank, oracle.p);
    lfd.update_rows(a);

    const ls::MatrixTruth truth(a);
    std::printf("frame %zu: FD error %.4f, learned FD error %.4f\n", i, ls::weighted_error_matrix(truth, fd.result()),
                ls::weighted_error_matrix(truth, lfd.result()));
  }
  return 0;
}
