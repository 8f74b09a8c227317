"""OID constants shared by the codec, the feature extractor and the mutator."""

# Name attribute types
CN = "2.5.4.3"
COUNTRY = "2.5.4.6"
ORG = "2.5.4.10"

# Signature algorithms
MD5_RSA = "1.2.840.113549.1.1.4"
SHA1_RSA = "1.2.840.113549.1.1.5"
SHA256_RSA = "1.2.840.113549.1.1.11"
SHA384_RSA = "1.2.840.113549.1.1.12"
SHA512_RSA = "1.2.840.113549.1.1.13"
ECDSA_SHA256 = "1.2.840.10045.4.3.2"
ECDSA_SHA384 = "1.2.840.10045.4.3.3"
DSA_SHA256 = "2.16.840.1.101.3.4.3.2"

# Public key algorithms
RSA_ENCRYPTION = "1.2.840.113549.1.1.1"

# Extensions (the first eleven are the mutation targets)
BASIC_CONSTRAINTS = "2.5.29.19"
KEY_USAGE = "2.5.29.15"
EXT_KEY_USAGE = "2.5.29.37"
SUBJECT_ALT_NAME = "2.5.29.17"
AUTHORITY_KEY_ID = "2.5.29.35"
SUBJECT_KEY_ID = "2.5.29.14"
CRL_DISTRIBUTION_POINTS = "2.5.29.31"
CERTIFICATE_POLICIES = "2.5.29.32"
AUTHORITY_INFO_ACCESS = "1.3.6.1.5.5.7.1.1"
NAME_CONSTRAINTS = "2.5.29.30"
SCT_LIST = "1.3.6.1.4.1.11129.2.4.2"

ISSUER_ALT_NAME = "2.5.29.18"
POLICY_CONSTRAINTS = "2.5.29.36"
POLICY_MAPPINGS = "2.5.29.33"
SUBJECT_DIRECTORY_ATTRS = "2.5.29.9"
INHIBIT_ANY_POLICY = "2.5.29.54"
FRESHEST_CRL = "2.5.29.46"
SUBJECT_INFO_ACCESS = "1.3.6.1.5.5.7.1.11"
PRIVATE_KEY_USAGE_PERIOD = "2.5.29.16"
NETSCAPE_CERT_TYPE = "2.16.840.1.113730.1.1"
NETSCAPE_COMMENT = "2.16.840.1.113730.1.13"
MS_APPLICATION_POLICIES = "1.3.6.1.4.1.311.21.10"
MS_CERTIFICATE_TEMPLATE = "1.3.6.1.4.1.311.21.7"
ENTRUST_VERSION_INFO = "1.2.840.113533.7.65.0"
OCSP_NO_CHECK = "1.3.6.1.5.5.7.48.1.5"
TLS_FEATURE = "1.3.6.1.5.5.7.1.24"
CT_PRECERT_POISON = "1.3.6.1.4.1.11129.2.4.3"
LOGOTYPE = "1.3.6.1.5.5.7.1.12"
QC_STATEMENTS = "1.3.6.1.5.5.7.1.3"
BIOMETRIC_INFO = "1.3.6.1.5.5.7.1.2"
SMIME_CAPABILITIES = "1.2.840.113549.1.9.15"

# Extended key usage purposes
EKU_SERVER_AUTH = "1.3.6.1.5.5.7.3.1"
EKU_CLIENT_AUTH = "1.3.6.1.5.5.7.3.2"

# Certificate policy identifiers
ANY_POLICY = "2.5.29.32.0"

# OCSP access method (inside authorityInfoAccess)
AD_OCSP = "1.3.6.1.5.5.7.48.1"
