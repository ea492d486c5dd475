// Copyright 2026 srosync authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Umbrella header: multichannel sampling-rate-offset estimation by joint
// maximum-likelihood optimization, with pairwise baselines, a scenario
// simulator, and WAV/JSON plumbing.

#ifndef SROSYNC_SROSYNC_HPP
#define SROSYNC_SROSYNC_HPP

#include "srosync/commands.hpp"
#include "srosync/common.hpp"
#include "srosync/io.hpp"
#include "srosync/joint.hpp"
#include "srosync/likelihood.hpp"
#include "srosync/pairwise.hpp"
#include "srosync/report.hpp"
#include "srosync/signal.hpp"
#include "srosync/simulate.hpp"

#endif  // SROSYNC_SROSYNC_HPP
