#pragma once

namespace icps {

/// Thread count used by the OpenMP kernels. Defaults to 1; every kernel
/// produces bitwise-identical output for any setting because each output
/// element is owned by exactly one iteration.
int max_threads();
void set_max_threads(int n);

}  // namespace icps
