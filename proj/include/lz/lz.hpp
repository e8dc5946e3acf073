#ifndef LZ_LZ_HPP
#define LZ_LZ_HPP

#include "lz/error.hpp"
#include "lz/protocol.hpp"
#include "lz/fock.hpp"
#include "lz/dopri5.hpp"
#include "lz/parallel.hpp"
#include "lz/spectra.hpp"
#include "lz/meanfield.hpp"
#include "lz/exact.hpp"
#include "lz/phasespace.hpp"
#include "lz/open_system.hpp"

#endif  // LZ_LZ_HPP
