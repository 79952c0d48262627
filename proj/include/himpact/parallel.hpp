#pragma once

namespace himpact {

/// Number of OpenMP threads used by the parallel kernels.
int thread_count();

/// Set the OpenMP thread count; n <= 0 restores the runtime default.
void set_thread_count(int n);

} // namespace himpact
