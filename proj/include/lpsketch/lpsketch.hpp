#pragma once

#include "lpsketch/common.hpp"
#include "lpsketch/countsketch.hpp"
#include "lpsketch/dupfinder.hpp"
#include "lpsketch/hashing.hpp"
#include "lpsketch/l0_sampler.hpp"
#include "lpsketch/lp_sampler.hpp"
#include "lpsketch/normest.hpp"
#include "lpsketch/oracle.hpp"
#include "lpsketch/sparse_recovery.hpp"
#include "lpsketch/stream_io.hpp"
