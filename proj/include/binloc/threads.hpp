#pragma once

namespace binloc {

// Worker-pool size for the OpenMP kernels. 0 = library default
// (hardware concurrency). Results are scheduling-independent, so the
// thread count never changes any output.
void set_num_threads(int n);
int num_threads();

}  // namespace binloc
