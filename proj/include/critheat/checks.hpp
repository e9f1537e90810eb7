#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace critheat {

/// One measured quantity against its pinned tolerance. Informational items
/// are reported but do not decide the verdict.
struct CheckItem {
    std::string label;
    double value = 0;
    double threshold = 0;
    std::string relation;  // "<", ">", ">=", "in" (within [threshold, upper])
    double upper = 0;
    bool passed = false;
    bool informational = false;
};

struct CheckReport {
    int id = 0;
    std::string name;
    std::vector<CheckItem> items;
    double seconds = 0;
    std::string note;

    bool passed() const;
    /// "PASS"/"FAIL", the id and name, and the decisive items.
    std::string summary_line() const;
};

// Each suite recomputes what it needs from scratch.
CheckReport check_constants();                                   // 1
CheckReport check_bubble_residual();                             // 2
CheckReport check_energy_invariance();                           // 3
CheckReport check_green_matrix(std::uint64_t seed = 3);          // 4
CheckReport check_height_system(std::uint64_t seed = 17);        // 5
CheckReport check_spectral();                                    // 6
CheckReport check_coercivity();                                  // 7
CheckReport check_supersolution();                               // 8
CheckReport check_correction_gain();                             // 9
CheckReport check_parameter_dynamics();                          // 10
/// The full near-threshold search at default resolution (several minutes).
CheckReport check_blowup_rate(double time_budget = 540.0);       // 11
/// Cheap simulator invariants: fixed point, energy, comparison, monotone ladder.
CheckReport check_simulator_invariants();

}  // namespace critheat
