#pragma once

// 2D incompressible Navier-Stokes on general polygonal meshes: lowest-order
// divergence-free virtual elements with an Arrow-Hurwicz saddle-point
// iteration.

#include "vemns/assembly.hpp"
#include "vemns/benchmarks.hpp"
#include "vemns/geometry.hpp"
#include "vemns/io.hpp"
#include "vemns/mesh.hpp"
#include "vemns/mesh_io.hpp"
#include "vemns/polybasis.hpp"
#include "vemns/postprocess.hpp"
#include "vemns/projectors.hpp"
#include "vemns/solver.hpp"
#include "vemns/voronoi.hpp"
