#pragma once

// Chain verification kernels. Both return the smallest seq whose line fails
// any check: canonical form, seq continuity, payload digest, link to the
// previous line, chain digest.
//
// The serial version is the reference; the OpenMP version parses and checks
// lines independently and reduces with min. Tests hold them equal.

#include <span>
#include <string>

#include "scribe/audit_log.hpp"

namespace scribe {

ChainVerdict verify_chain_serial(std::span<const std::string> lines);
ChainVerdict verify_chain_parallel(std::span<const std::string> lines);

}  // namespace scribe
