#pragma once

#include "polarsep/chroma.hpp"
#include "polarsep/cluster.hpp"
#include "polarsep/image.hpp"
#include "polarsep/image_io.hpp"
#include "polarsep/metrics.hpp"
#include "polarsep/optimizer.hpp"
#include "polarsep/rpca.hpp"
#include "polarsep/synth.hpp"
#include "polarsep/trs.hpp"

namespace polarsep {

// Default double-precision aliases; every type and free function in the
// library is also usable with float.
using RgbImage = RgbImageT<double>;
using GrayImage = GrayImageT<double>;
using PolarizedStack = PolarizedStackT<double>;
using TrsMaps = TrsMapsT<double>;
using RawComponents = RawComponentsT<double>;
using ChromaticityImage = ChromaticityImageT<double>;
using ClusterSet = ClusterSetT<double>;
using RpcaOptions = RpcaOptionsT<double>;
using RpcaResult = RpcaResultT<double>;
using PgmOptions = PgmOptionsT<double>;
using SeparationParams = SeparationParamsT<double>;
using SeparationState = SeparationStateT<double>;
using SeparationResult = SeparationResultT<double>;
using IterationStats = IterationStatsT<double>;
using MetricsReport = MetricsReportT<double>;
using SynthSpec = SynthSpecT<double>;
using RegionSpec = RegionSpecT<double>;
using RenderOutput = RenderOutputT<double>;

}  // namespace polarsep
