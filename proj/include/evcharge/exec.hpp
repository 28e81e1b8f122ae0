#pragma once

namespace evcharge {

/// Selects between the serial reference path of a kernel and its OpenMP path.
/// Both paths must produce identical results; the serial one is kept for tests
/// and for benchmarking the parallel speedup.
enum class Exec { serial, parallel };

} // namespace evcharge
