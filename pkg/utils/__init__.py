# Support code: configuration, data, reporting and figures