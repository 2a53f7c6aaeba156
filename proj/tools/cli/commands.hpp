#pragma once

#include <iosfwd>

namespace attrition::cli {

enum ExitCode : int {
    ok = 0,
    usage = 1,          // bad arguments, unreadable or malformed model document
    validation = 2,     // the model fails an assumption check
    solver = 3,         // a numerical routine failed
    certification = 4,  // an equilibrium certificate failed
};

// Entry point shared by the executable and the integration tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace attrition::cli
