// Config-file loading: strict JSON (unknown keys are errors) mapped onto
// RunConfig and its nested specs.
#pragma once

#include <string>

#include "ofl/sim.hpp"

namespace ofl {

// Parses the run configuration from a JSON file. Every section rejects keys
// it does not understand, so typos fail loudly instead of silently using a
// default.
RunConfig load_run_config(const std::string& path);

// Parses just a method section (used by the compare subcommand's method
// list). `json_text` holds one JSON object.
MethodSpec parse_method_spec(const std::string& json_text);

// Compare configs look like run configs but carry a "methods" array instead
// of a single "method" section.
struct CompareConfig {
    RunConfig base;
    std::vector<MethodSpec> methods;
    int repeats = 10;
};
CompareConfig load_compare_config(const std::string& path);

}  // namespace ofl
