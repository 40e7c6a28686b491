#pragma once

#include "errors.hpp"
#include "grid.hpp"
#include "image.hpp"
#include "ingest.hpp"
#include "oja.hpp"
#include "lateral.hpp"
#include "eval.hpp"
#include "report.hpp"
#include "config.hpp"
