// Compares Misra-Gries with and without a heavy-hitter oracle on a Zipfian
// stream at a 750-word budget.

#include <cstdio>

#include "learnsketch/learnsketch.hpp"

int main() {
  namespace ls = learnsketch;
  const auto inst = ls::zipf_stream(10000, 1000000, 42);

  const auto mg_plan = ls::plan_freq_sketch(ls::FreqAlgorithm::mg, 750, ls::SpaceSplit::half);
  ls::MisraGriesSketch mg(mg_plan.counters);

  const auto lmg_plan = ls::plan_freq_sketch(ls::FreqAlgorithm::learned_mg, 750, ls::SpaceSplit::half);
  ls::LearnedMisraGriesSketch lmg(ls::perfect_freq_oracle(inst.truth, lmg_plan.heavy),
                                  ls::MisraGriesSketch(lmg_plan.counters));

  for (auto id : inst.items) {
    mg.update(id);
    lmg.update(id);
  }

  const double mg_err = ls::weighted_error_freq(inst.truth, [&](ls::ElementId id) { return mg.estimate(id); });
  const double lmg_err = ls::weighted_error_freq(inst.truth, [&](ls::ElementId id) { return lmg.estimate(id); });
  std::printf("element 1: true %llu, MG %llu, learned MG %llu\n",
              static_cast<unsigned long long>(inst.truth.count(1)), static_cast<unsigned long long>(mg.estimate(1)),
              static_cast<unsigned long long>(lmg.estimate(1)));
  std::printf("weighted error: MG %.2f (%zu words), learned MG %.2f (%zu words)\n", mg_err, mg.space_words(), lmg_err,
              lmg.space_words());
  return 0;
}
