#pragma once

#include <iosfwd>

namespace teggcn {

// Self-contained correctness sweep: model gradients against central
// differences, the nearest-neighbor estimator against the histogram oracle
// and analytic values, and k-d tree range counts against brute force. Prints
// one line per check; returns false if any check fails.
bool run_verification(std::ostream& out);

}  // namespace teggcn
