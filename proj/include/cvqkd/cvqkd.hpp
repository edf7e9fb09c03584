#pragma once

#include "cvqkd/channel.hpp"
#include "cvqkd/classifier.hpp"
#include "cvqkd/errors.hpp"
#include "cvqkd/estimation.hpp"
#include "cvqkd/params.hpp"
#include "cvqkd/rng.hpp"
#include "cvqkd/security.hpp"
#include "cvqkd/mitigation.hpp"
