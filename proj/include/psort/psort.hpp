#pragma once

#include "psort/core_sorts.hpp"
#include "psort/dist_sort.hpp"
#include "psort/errors.hpp"
#include "psort/shm_parallel.hpp"
#include "psort/transport.hpp"
#include "psort/wire.hpp"
#include "psort/workbench.hpp"
