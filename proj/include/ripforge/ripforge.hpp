#pragma once

#include "ripforge/errors.hpp"
#include "ripforge/matrix.hpp"
#include "ripforge/decompositions.hpp"
#include "ripforge/sylvester.hpp"
#include "ripforge/dft.hpp"
#include "ripforge/rng.hpp"
#include "ripforge/parallel.hpp"
#include "ripforge/matrix_io.hpp"
#include "ripforge/image_io.hpp"
#include "ripforge/toml_lite.hpp"
#include "ripforge/ensembles.hpp"
#include "ripforge/factorize.hpp"
#include "ripforge/wavelet.hpp"
#include "ripforge/dictionaries.hpp"
#include "ripforge/sparse_coding.hpp"
#include "ripforge/recovery.hpp"
#include "ripforge/metrics.hpp"
#include "ripforge/tv.hpp"
#include "ripforge/phantom.hpp"
#include "ripforge/mri.hpp"
#include "ripforge/mri_benchmark.hpp"
#include "ripforge/phase_transition.hpp"
