#pragma once

#include "varicurate/audit.hpp"
#include "varicurate/curation.hpp"
#include "varicurate/embedset.hpp"
#include "varicurate/error.hpp"
#include "varicurate/frc.hpp"
#include "varicurate/guidance.hpp"
#include "varicurate/io.hpp"
#include "varicurate/labels.hpp"
#include "varicurate/simkernel.hpp"
#include "varicurate/vendi.hpp"
#include "varicurate/zslabel.hpp"
