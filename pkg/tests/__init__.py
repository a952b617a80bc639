# Tests for circle-npd
