#pragma once

#include "pnnsim/types.hpp"

namespace pnnsim {

/// Square-law detection: |field|^2 in mW at the envelope's full rate.
/// baud_hz fixes the samples-per-symbol bookkeeping of the trace.
ElectricalTrace photodetect(const ComplexEnvelope& env, double baud_hz);

/// Photodiode bandwidth then oscilloscope bandwidth (both 4th-order Bessel,
/// bulk delay removed), then integer decimation to scope_rate_hz. Requires
/// the input rate to be an integer multiple of scope_rate_hz and scope_rate_hz
/// an integer multiple of the symbol rate.
ElectricalTrace receiver_chain(const ElectricalTrace& trace, double pd_bw_hz,
                               double scope_bw_hz, double scope_rate_hz);

struct AlignResult {
    ElectricalTrace trace;
    int shift_symbols = 0;
    bool defined = true;  // false when the trace has no variance to correlate
};

/// Circular alignment at symbol granularity: the trace is subsampled at
/// k = sps/2, circularly cross-correlated with the target symbol values, and
/// rolled by the maximizing shift (smallest shift wins ties). After
/// alignment, symbol slot n of the trace corresponds to target[n].
AlignResult align(const ElectricalTrace& trace, const SymbolSequence& target);

}  // namespace pnnsim
