//
// rxnseq - reaction product prediction toolkit
// SPDX-License-Identifier: Apache-2.0
//

#ifndef RXNSEQ_PARALLEL_H_
#define RXNSEQ_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace rxnseq {

// Worker count: RXNSEQ_THREADS if set to a positive integer, otherwise the
// hardware concurrency.
int thread_count();

// Runs fn(i) for i in [0, n). Callers write results into per-index slots, so
// output never depends on scheduling. The first exception thrown by any task
// is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)> &fn,
                  int threads = thread_count());

}  // namespace rxnseq

#endif  // RXNSEQ_PARALLEL_H_
