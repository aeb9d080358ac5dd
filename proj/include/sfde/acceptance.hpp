#ifndef SFDE_ACCEPTANCE_HPP
#define SFDE_ACCEPTANCE_HPP

#include <functional>
#include <string>
#include <vector>

namespace sfde {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

// The bundled acceptance-experiment suite: one entry per shipped criterion,
// each with pinned tolerances. `only` restricts to the listed ids.
std::vector<CriterionResult> run_acceptance(const std::vector<int>& only = {},
                                            const std::function<void(const CriterionResult&)>& on_done = {});

}  // namespace sfde

#endif
