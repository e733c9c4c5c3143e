#pragma once

#include "binloc/gllim.hpp"
#include "binloc/posterior.hpp"
#include "binloc/spectro.hpp"

// Straight-line serial implementations of the parallel kernels. These follow
// the defining formulas term by term (full d,t loops, no factored row
// statistics) and are kept as the comparison baseline for the unit tests and
// the kernel benchmark.
namespace binloc::reference {

posterior::PosteriorGmm spectrogram_posterior(const gllim::GllimModel& model,
                                              const spectro::BinauralSpectrogram& spec);

RMat e_step(const gllim::GllimModel& model, const gllim::TrainingSet& train);

double log_likelihood(const gllim::GllimModel& model, const gllim::TrainingSet& train);

gllim::GllimModel m_step(const RMat& resp, const gllim::TrainingSet& train,
                         gllim::PriorMode prior_mode);

spectro::BinauralSpectrogram binaural_features(const spectro::ComplexSpectrogram& left,
                                               const spectro::ComplexSpectrogram& right);

}  // namespace binloc::reference
