# TPA metrology toolkit
