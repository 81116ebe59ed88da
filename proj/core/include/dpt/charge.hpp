#pragma once

#include "dpt/units.hpp"

namespace dpt {

/// Burns CPU on the calling thread until it has consumed `d` of thread CPU time.
/// On an oversubscribed host this takes longer than `d` of wall time.
void spin_cpu(Nanos d);

/// Blocks the calling thread for `d` of wall time (storage or device latency).
void wait_wall(Nanos d);

}  // namespace dpt
