#ifndef SARSIM_SARSIM_HPP
#define SARSIM_SARSIM_HPP

// Dual-paradigm SAR target-signature simulator and synthetic-dataset factory.

#include "augment.hpp"
#include "bvh.hpp"
#include "centers.hpp"
#include "fft.hpp"
#include "geometry.hpp"
#include "ground.hpp"
#include "imaging.hpp"
#include "io.hpp"
#include "mesh.hpp"
#include "production.hpp"
#include "rng.hpp"
#include "sbr.hpp"
#include "vec.hpp"

#endif
